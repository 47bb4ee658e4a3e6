"""Selects the compiled assembly core when available, numpy fallback otherwise.

Set FRACHS_FORCE_PYTHON=1 to force the fallback (used by the benchmark and
for debugging).
"""

from __future__ import annotations

import os

from . import _pykern

if os.environ.get("FRACHS_FORCE_PYTHON"):
    _impl = _pykern
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykern

BACKEND_NAME: str = _impl.BACKEND_NAME
accumulate_far_pairs = _impl.accumulate_far_pairs
far_pair_energy = _impl.far_pair_energy
far_pair_commutator = _impl.far_pair_commutator


def both_backends():
    """(name, module) pairs for every available backend; for tests/benchmarks."""
    out = [("python", _pykern)]
    try:
        from . import _ckern

        out.append(("cython", _ckern))
    except ImportError:
        pass
    return out
