"""Pure-numpy implementations of the hot assembly loops.

Mirrors the compiled extension in ``_ckern.pyx``; ``backend`` picks one at
import time.  The per-separation kernel tensors are precomputed by the
caller, so the work here is Toeplitz-style accumulation only.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def accumulate_far_pairs(A, f, cAA, cBB, cX, h2):
    """Add all cell-pair interactions with separation d >= 2 into node matrix A.

    A        : (M+1, M+1) node matrix, modified in place
    f        : (M,) array, e^(nu * left_edge_a) per cell
    cAA, cBB : (M, 2, 2) per-separation same-side local tensors
    cX       : (M, 2, 2) per-separation cross tensors
    h2       : scalar, h^2

    For each unordered cell pair (a, b = a + d), with w_ab = 2 h^2 f_a f_b:

        A[a+i, a+j] += w_ab * cAA[d,i,j]
        A[b+i, b+j] += w_ab * cBB[d,i,j]
        A[a+i, b+j] -= w_ab * cX[d,i,j],  A[b+j, a+i] -= w_ab * cX[d,i,j]
    """
    M = f.shape[0]
    idx = np.arange(M)
    for d in range(2, M):
        a = idx[: M - d]
        b = a + d
        w = 2.0 * h2 * f[a] * f[b]
        for i in range(2):
            for j in range(2):
                A[a + i, a + j] += w * cAA[d, i, j]
                A[b + i, b + j] += w * cBB[d, i, j]
                c = cX[d, i, j]
                A[a + i, b + j] -= w * c
                A[b + j, a + i] -= w * c
    return A


def far_pair_energy(U, V, f, g2, h2):
    """Difference-form reduction over far cell pairs for pointwise field values.

    U, V : (M, G) field values at the per-cell Gauss points
    g2   : (M, G, G) kernel weights g2[d, q, p] (Gauss weights and the
           e^(nu h (t_q + t_p)) factor folded in)

    Returns sum over unordered pairs (a, b = a+d), d >= 2, of
        2 h^2 f_a f_b * sum_qp g2[d,q,p] (U[a,q] - U[b,p]) (V[a,q] - V[b,p]).
    """
    M = U.shape[0]
    total = 0.0
    for d in range(2, M):
        a = slice(0, M - d)
        b = slice(d, M)
        du = U[a, :, None] - U[b, None, :]
        dv = V[a, :, None] - V[b, None, :]
        w = 2.0 * h2 * f[: M - d] * f[d:]
        total += float(np.einsum("a,aqp->", w, du * dv * g2[d][None, :, :]))
    return total


def far_pair_commutator(E, P, S, f, g2, h2):
    """Commutator-form reduction over far cell pairs.

    Integrand (eta(x)-eta(y)) (phi(y) psi(x) - phi(x) psi(y)), symmetric
    under x <-> y, with E/P/S the pointwise values of eta/phi/psi.

    Returns sum over unordered pairs (a, b = a+d), d >= 2, of
        2 h^2 f_a f_b * sum_qp g2[d,q,p]
            * (E[a,q]-E[b,p]) * (P[b,p] S[a,q] - P[a,q] S[b,p]).
    """
    M = E.shape[0]
    total = 0.0
    for d in range(2, M):
        a = slice(0, M - d)
        b = slice(d, M)
        de = E[a, :, None] - E[b, None, :]
        cross = P[b, None, :] * S[a, :, None] - P[a, :, None] * S[b, None, :]
        w = 2.0 * h2 * f[: M - d] * f[d:]
        total += float(np.einsum("a,aqp->", w, de * cross * g2[d][None, :, :]))
    return total
