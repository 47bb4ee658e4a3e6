"""Mass pipeline: singular rhs, corrector, extraction, verdicts."""

import numpy as np
import pytest

from frachs import DomainError, ProblemParams, beta_pm, gamma_crit, hardy_constant
from frachs.extremal import lambda_1
from frachs.forms import assemble, get_override_operator
from frachs.grid import RadialField, RadialGrid, cutoff_field
from frachs.mass import (
    MassVerdict,
    compute_mass,
    extract_mass,
    manufactured_recovery,
    mass_criterion,
    positivity_check,
    singular_rhs,
    solve_corrector,
)

N_MASS = 3.0
A_MASS = 1.0


@pytest.fixture(scope="module")
def mass_grid():
    return RadialGrid(n=N_MASS, r_min=1e-9, R=1.0, N=450)


@pytest.fixture(scope="module")
def mass_forms(mass_grid):
    return assemble(mass_grid, N_MASS, A_MASS, s=0.5)


@pytest.fixture(scope="module")
def mass_params(mass_forms):
    gh, gc = hardy_constant(N_MASS, A_MASS), gamma_crit(N_MASS, A_MASS)
    gamma = 0.5 * (gc + gh)
    lam1, _ = lambda_1(mass_forms, gamma)
    return ProblemParams(n=N_MASS, alpha=A_MASS, s=0.5, gamma=gamma, lam=0.5 * lam1)


class TestSingularRhs:
    def test_rejects_subcritical_gamma(self, mass_grid):
        params = ProblemParams(n=N_MASS, alpha=A_MASS, s=0.5, gamma=0.2, lam=0.1)
        eta = cutoff_field(mass_grid, 0.2)
        with pytest.raises(DomainError):
            singular_rhs(mass_grid, params, eta)

    def test_cancellation_in_inner_region(self, mass_grid, mass_params):
        # where eta == 1 the gamma-part of the operator kills the power law
        # exactly; f must be tiny against the local operator scale
        eta = cutoff_field(mass_grid, 0.2)
        f = singular_rhs(mass_grid, mass_params, eta)
        _, bp = beta_pm(N_MASS, A_MASS, mass_params.gamma)
        r = mass_grid.nodes
        inner = r <= np.sqrt(mass_grid.r_min * 0.2)
        scale = mass_params.gamma * r ** (-A_MASS - bp)
        assert np.max(np.abs(f.values[inner]) / scale[inner]) <= 0.02

    def test_rapid_decay_beyond_cutoff_support(self, mass_grid, mass_params):
        eta = cutoff_field(mass_grid, 0.2)
        f = singular_rhs(mass_grid, mass_params, eta)
        r = mass_grid.nodes
        band = (r > 0.15) & (r < 0.5)
        far = r > 0.9
        assert np.max(np.abs(f.values[far])) <= 1e-2 * np.max(np.abs(f.values[band]))

    def test_transition_profile_against_direct_operator_path(self, mass_grid, mass_params):
        # independent route: apply the operator to eta r^(-bp) directly with
        # the analytic inner override, instead of the commutator split
        eta = cutoff_field(mass_grid, 0.2)
        f = singular_rhs(mass_grid, mass_params, eta)
        _, bp = beta_pm(N_MASS, A_MASS, mass_params.gamma)
        r = mass_grid.nodes
        op = get_override_operator(mass_grid, N_MASS, A_MASS)
        v = eta.values * r ** (-bp)
        lap = op.nodal_action(v, inner=("power", bp, 1.0), outer=("zero",))
        f_direct = -(lap - (mass_params.gamma * r ** (-A_MASS) + mass_params.lam) * v)
        band = (r > 0.1) & (r < 0.6)
        scale = np.max(np.abs(f.values[band]))
        assert np.allclose(f.values[band], f_direct[band], atol=2e-2 * scale)
        assert np.all(np.sign(f.values[band]) == np.sign(f_direct[band]))


class TestSolveCorrector:
    def test_zero_rhs_gives_zero(self, mass_forms, mass_params, mass_grid):
        z = RadialField(mass_grid, np.zeros(mass_grid.N))
        g = solve_corrector(mass_forms, mass_params, z)
        assert np.allclose(g.values, 0.0, atol=1e-14)

    def test_linearity(self, mass_forms, mass_params, mass_grid):
        rng = np.random.default_rng(5)
        f1 = RadialField(mass_grid, rng.standard_normal(mass_grid.N))
        f2 = RadialField(mass_grid, rng.standard_normal(mass_grid.N))
        fs = RadialField(mass_grid, f1.values + f2.values)
        g1 = solve_corrector(mass_forms, mass_params, f1)
        g2 = solve_corrector(mass_forms, mass_params, f2)
        gs = solve_corrector(mass_forms, mass_params, fs)
        scale = np.max(np.abs(gs.values))
        assert np.allclose(g1.values + g2.values, gs.values, atol=1e-9 * scale)

    def test_refuses_lam_at_lambda1(self, mass_forms, mass_params, mass_grid):
        lam1, _ = lambda_1(mass_forms, mass_params.gamma)
        bad = mass_params.with_(lam=lam1 * 1.0001)
        eta = cutoff_field(mass_grid, 0.2)
        f = singular_rhs(mass_grid, mass_params, eta)
        with pytest.raises(DomainError):
            solve_corrector(mass_forms, bad, f)

    def test_succeeds_just_below_lambda1(self, mass_forms, mass_params, mass_grid):
        lam1, _ = lambda_1(mass_forms, mass_params.gamma)
        near = mass_params.with_(lam=0.99 * lam1)
        eta = cutoff_field(mass_grid, 0.2)
        f = singular_rhs(mass_grid, near, eta)
        g = solve_corrector(mass_forms, near, f)
        assert np.all(np.isfinite(g.values))

    def test_direct_and_cg_agree(self, mass_forms, mass_params, mass_grid):
        eta = cutoff_field(mass_grid, 0.2)
        f = singular_rhs(mass_grid, mass_params, eta)
        g1 = solve_corrector(mass_forms, mass_params, f, method="direct")
        g2 = solve_corrector(mass_forms, mass_params, f, method="cg")
        sup = np.max(np.abs(g1.values - g2.values)) / np.max(np.abs(g1.values))
        assert sup <= 1e-8


class TestExtractMass:
    def test_exact_planted_power(self, mass_grid, mass_params):
        bm, _ = beta_pm(N_MASS, A_MASS, mass_params.gamma)
        c = -1.37
        g = RadialField(mass_grid, c * mass_grid.nodes ** (-bm))
        res = extract_mass(g, mass_params)
        assert res.mass == pytest.approx(c, rel=1e-10)
        assert res.fit_r2 >= 0.99

    def test_subdominant_term_ignored_in_deep_window(self, mass_grid, mass_params):
        bm, _ = beta_pm(N_MASS, A_MASS, mass_params.gamma)
        c, d = 0.8, 2.0
        vals = c * mass_grid.nodes ** (-bm) + d * mass_grid.nodes ** (-bm + 1.0)
        res = extract_mass(RadialField(mass_grid, vals), mass_params)
        assert res.mass == pytest.approx(c, rel=1e-3)

    def test_window_too_small_rejected(self, mass_grid, mass_params):
        g = RadialField(mass_grid, mass_grid.nodes**-0.5)
        with pytest.raises(DomainError):
            extract_mass(g, mass_params, fit_window=(10, 13))


class TestManufactured:
    def test_recovery_within_one_percent(self, mass_grid, mass_params):
        recovered, rel_err = manufactured_recovery(mass_grid, mass_params)
        assert rel_err <= 0.01

    def test_recovery_negative_coefficient(self, mass_grid, mass_params):
        recovered, rel_err = manufactured_recovery(mass_grid, mass_params, planted=-0.4)
        assert rel_err <= 0.01
        assert recovered < 0


class TestMassCriterion:
    def _result(self, mass_grid, mass_params, mass, trusted=True):
        zero = RadialField(mass_grid, np.zeros(mass_grid.N))
        from frachs.mass import MassResult

        return MassResult(
            mass=mass,
            corrector=zero,
            profile=zero,
            fit_window=(10, 50),
            fit_r2=0.999 if trusted else 0.5,
            lambda_used=mass_params.lam,
            coercive=True,
            uncertainty=0.01,
            window_drift=0.01 if trusted else 0.5,
            trusted=trusted,
        )

    def test_positive_mass_verdict(self, mass_grid, mass_params):
        rep = mass_criterion(mass_params, self._result(mass_grid, mass_params, 0.3))
        assert rep.verdict is MassVerdict.MASS_POSITIVE_EXTREMALS_EXIST
        assert rep.margin == pytest.approx(30.0)

    def test_negative_mass_inconclusive(self, mass_grid, mass_params):
        rep = mass_criterion(mass_params, self._result(mass_grid, mass_params, -0.2))
        assert rep.verdict is MassVerdict.MASS_NONPOSITIVE_INCONCLUSIVE

    def test_untrusted_refused(self, mass_grid, mass_params):
        with pytest.raises(DomainError):
            mass_criterion(mass_params, self._result(mass_grid, mass_params, 0.3, trusted=False))

    def test_lam_zero_refused(self, mass_grid, mass_params):
        res = self._result(mass_grid, mass_params, 0.3)
        res.lambda_used = 0.0
        with pytest.raises(DomainError):
            mass_criterion(mass_params, res)


class TestPositivityCheck:
    def test_full_run_positive(self, mass_grid, mass_params):
        res = compute_mass(mass_grid, mass_params)
        assert positivity_check(res.profile) is True

    def test_planted_sign_flip_detected(self, mass_grid):
        vals = np.ones(mass_grid.N)
        vals[mass_grid.N // 2] = -0.1
        assert positivity_check(RadialField(mass_grid, vals)) is False

    def test_boundary_excluded(self, mass_grid):
        vals = np.ones(mass_grid.N)
        vals[0] = -1.0
        vals[-1] = 0.0
        assert positivity_check(RadialField(mass_grid, vals)) is True


class TestTestFunctionExpansion:
    def test_corrector_is_stationary_point_of_coefficient(self, mass_grid, mass_forms, mass_params):
        """The eps^(bp-bm) coefficient of J along the scaled-corrector family
        t -> eta u_eps + eps^((bp-bm)/2) (t g) is minimized at the true
        corrector (t = 1): the first-order cross terms cancel by g's
        equation, which is the first-order structure of the expansion.
        """
        from frachs.extremal import reference_mu_rn
        from frachs.mass import test_function_with_mass as coefficient_fit

        res = compute_mass(mass_grid, mass_params)
        eta = cutoff_field(mass_grid, 0.2)
        U = reference_mu_rn(N_MASS, A_MASS, 0.5, mass_params.gamma).field
        eps_list = [2.0**-k for k in range(6, 13)]

        def c1_at(t):
            gt = RadialField(mass_grid, t * res.corrector.values)
            return coefficient_fit(mass_forms, mass_params, U, gt, eta, eps_list)[0]

        vals = {t: c1_at(t) for t in (0.0, 0.6, 1.0, 1.4)}
        scale = abs(vals[1.0] - vals[0.0])
        assert all(vals[1.0] <= vals[t] + 0.02 * scale for t in (0.6, 1.4))

    def test_zero_corrector_reduces_to_bare_bubble_expansion(self, mass_grid, mass_forms, mass_params):
        from frachs.extremal import bubble, fit_exponents, j_functional, reference_mu_rn
        from frachs.mass import test_function_with_mass as coefficient_fit

        eta = cutoff_field(mass_grid, 0.2)
        U = reference_mu_rn(N_MASS, A_MASS, 0.5, mass_params.gamma).field
        eps_list = [2.0**-6, 2.0**-8, 2.0**-10]
        zero = RadialField(mass_grid, np.zeros(mass_grid.N))
        _, _, js = coefficient_fit(mass_forms, mass_params, U, zero, eta, eps_list)
        # with g = 0 the test function is exactly the cutoff bubble (of the
        # tail-normalized U); recompute one J value independently
        xi_u = U.grid.log_nodes
        a = int(np.searchsorted(xi_u, np.log(U.grid.R / 50.0)))
        b = int(np.searchsorted(xi_u, np.log(U.grid.R / 5.0)))
        lam_inf = fit_exponents(U, head_window=(10, 30), tail_window=(a, b)).lambdainf
        ue = bubble(RadialField(U.grid, U.values / lam_inf), eps_list[0], N_MASS, A_MASS,
                    target_grid=mass_grid)
        j_direct = j_functional(mass_forms, mass_params, eta.values * ue.values)
        assert js[0] == pytest.approx(j_direct, rel=1e-12)


class TestMassContinuity:
    def test_no_jumps_in_lambda(self, mass_grid, mass_forms, mass_params):
        lam1, _ = lambda_1(mass_forms, mass_params.gamma)
        masses = []
        for t in (0.0, 0.25, 0.5, 0.75, 0.9):
            res = compute_mass(mass_grid, mass_params.with_(lam=t * lam1))
            masses.append(res.mass)
        inc = np.abs(np.diff(masses))
        for a, b in zip(inc, inc[1:]):
            assert b <= 3.0 * a
