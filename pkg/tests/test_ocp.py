"""QP solver, certificate, and audit checks against enumeration/FD oracles."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ctrldisc.ocp import (
    Discretization,
    NoNegativeBasisError,
    OcpConfig,
    QpConvergenceError,
    build_certificate,
    convergence_study,
    estimate_operator_norm,
    feasibility_audit,
    minimize_nonneg_quadratic,
    solve_qp,
)


def enumerate_nonneg_qp(matrix, linear):
    """Active-set enumeration oracle for min 0.5 x'Qx + c'x s.t. x >= 0.

    Tries every subset of active (pinned-to-zero) coordinates; a candidate is
    KKT-valid when the free block solves to non-negative values and the
    gradient is non-negative on the active set.  Returns (x, objective).
    """
    n = matrix.shape[0]
    best_x, best_val = None, np.inf
    for active in itertools.product((False, True), repeat=n):
        free = [i for i in range(n) if not active[i]]
        x = np.zeros(n)
        if free:
            sub = matrix[np.ix_(free, free)]
            x[free] = np.linalg.solve(sub, -linear[free])
            if (x[free] < -1e-11).any():
                continue
        grad = matrix @ x + linear
        if any(grad[i] < -1e-11 for i in range(n) if active[i]):
            continue
        val = 0.5 * float(x @ (matrix @ x)) + float(linear @ x)
        if val < best_val:
            best_x, best_val = x, val
    assert best_x is not None
    return best_x, best_val


# ---------------------------------------------------------------------------
# generic QP core


def test_core_solver_matches_enumeration_oracle():
    rng = np.random.default_rng(42)
    for trial in range(20):
        n = int(rng.integers(2, 11))
        raw = rng.standard_normal((n, n))
        matrix = raw @ raw.T + n * np.eye(n)
        linear = 3.0 * rng.standard_normal(n)

        x_ref, val_ref = enumerate_nonneg_qp(matrix, linear)

        grad = lambda x: matrix @ x + linear
        lipschitz = 1.05 * estimate_operator_norm(lambda s: matrix @ s, n)
        x, _, val, res, iters = minimize_nonneg_quadratic(
            grad, linear, 0.0, np.zeros(n), lipschitz, 1e-12, 50_000
        )
        assert iters >= 0, f"trial {trial} hit the iteration cap"
        assert val == pytest.approx(val_ref, abs=1e-8)
        np.testing.assert_allclose(x, x_ref, atol=1e-6)
        assert (x >= 0).all()


def test_core_solver_flags_iteration_cap():
    matrix = np.array([[2.0, 0.0], [0.0, 1.0]])
    linear = np.array([-1.0, -1.0])
    *_, iters = minimize_nonneg_quadratic(
        lambda x: matrix @ x + linear, linear, 0.0, np.zeros(2), 2.1, 1e-14, 2
    )
    assert iters < 0


def test_estimate_operator_norm():
    diag = np.diag([3.0, 1.0, 0.5])
    est = estimate_operator_norm(lambda v: diag @ v, 3, max_iterations=200, rtol=1e-10)
    assert est == pytest.approx(3.0, rel=1e-6)
    assert estimate_operator_norm(lambda v: 0.0 * v, 3) == 0.0


# ---------------------------------------------------------------------------
# objective and gradient


@pytest.fixture(scope="module")
def disc_d2k2():
    return Discretization(OcpConfig(dim=2, degree=2, n=4))


def test_objective_at_zero_is_volume(disc_d2k2):
    assert disc_d2k2.objective(np.zeros(disc_d2k2.num_control_dofs)) == pytest.approx(
        1.0, abs=1e-14
    )


def test_objective_at_ones(disc_d2k2):
    # u = 1 gives y = 1: ||1 + 1||^2 + alpha ||1||^2 = 4 + alpha
    value = disc_d2k2.objective(np.ones(disc_d2k2.num_control_dofs))
    assert value == pytest.approx(4.0 + disc_d2k2.config.alpha, abs=1e-10)


def test_gradient_at_zero_is_twice_column_sums(disc_d2k2):
    # y = 0 makes the adjoint solve A p = M 1, i.e. p = 1, so g = 2 C' 1
    g0 = disc_d2k2.gradient(np.zeros(disc_d2k2.num_control_dofs))
    np.testing.assert_allclose(g0, 2.0 * disc_d2k2.column_sums, atol=1e-12)


def test_gradient_matches_central_differences(disc_d2k2):
    disc = disc_d2k2
    rng = np.random.default_rng(0)
    lam = np.abs(rng.standard_normal(disc.num_control_dofs))
    g = disc.gradient(lam)
    step = 1e-5
    fd = np.empty_like(g)
    for i in range(lam.size):
        bump = np.zeros_like(lam)
        bump[i] = step
        fd[i] = (disc.objective(lam + bump) - disc.objective(lam - bump)) / (2 * step)
    assert np.linalg.norm(fd - g) / np.linalg.norm(g) <= 1e-6


def test_objective_is_quadratic_secant_identity(disc_d2k2):
    # J(lam + s) - J(lam) - g(lam).s is independent of lam for a quadratic
    disc = disc_d2k2
    rng = np.random.default_rng(1)
    s = rng.standard_normal(disc.num_control_dofs)
    lam1 = np.abs(rng.standard_normal(disc.num_control_dofs))
    lam2 = 2.0 * np.abs(rng.standard_normal(disc.num_control_dofs))
    excess1 = disc.objective(lam1 + s) - disc.objective(lam1) - disc.gradient(lam1) @ s
    excess2 = disc.objective(lam2 + s) - disc.objective(lam2) - disc.gradient(lam2) @ s
    assert excess1 == pytest.approx(excess2, abs=1e-8)


def test_wrong_length_rejected(disc_d2k2):
    with pytest.raises(ValueError):
        disc_d2k2.objective(np.zeros(3))


# ---------------------------------------------------------------------------
# solve_qp


def test_zero_is_kkt_point_for_clean_degrees():
    for degree in (1, 2, 3, 5):
        disc = Discretization(OcpConfig(dim=2, degree=degree, n=2 if degree == 5 else 4))
        g0 = disc.gradient(np.zeros(disc.num_control_dofs))
        assert g0.min() >= -1e-12
        solution = solve_qp(disc)
        assert np.linalg.norm(solution.control) <= 1e-8
        assert solution.objective == pytest.approx(1.0, abs=1e-8)
        assert solution.kkt_residual <= disc.config.qp_tol


def test_counterexample_solution_beats_certificate_bound():
    disc = Discretization(OcpConfig(dim=2, degree=4, n=4))
    certificate = build_certificate(disc)
    solution = solve_qp(disc)
    assert solution.objective <= certificate.objective_bound + 1e-8
    assert solution.objective <= certificate.measured_objective + 1e-10
    assert solution.objective <= 1.0  # never worse than lam = 0
    assert solution.control.min() >= -1e-12
    assert solution.kkt_residual <= disc.config.qp_tol


def test_solve_qp_accepts_config():
    solution = solve_qp(OcpConfig(dim=1, degree=2, n=4))
    assert solution.objective == pytest.approx(1.0, abs=1e-8)


def test_solve_qp_iteration_cap_carries_best():
    disc = Discretization(OcpConfig(dim=1, degree=8, n=2, max_qp_iterations=3))
    with pytest.raises(QpConvergenceError) as excinfo:
        solve_qp(disc)
    best = excinfo.value.best
    assert best.iterations == 3
    assert best.objective <= 1.0


# ---------------------------------------------------------------------------
# certificate


def test_certificate_refused_when_all_integrals_nonnegative():
    for degree in (1, 2, 3, 5):
        with pytest.raises(NoNegativeBasisError):
            build_certificate(OcpConfig(dim=2, degree=degree, n=2))


def test_certificate_exists_for_d1_k8():
    certificate = build_certificate(OcpConfig(dim=1, degree=8, n=4))
    assert certificate.beta > 0
    assert certificate.m_squared > 0
    assert len(certificate.ref_negative_indices) > 0


def test_certificate_existence_matches_audit_d1():
    from ctrldisc.exactbasis import audit_degrees

    report = audit_degrees(1, 11)
    for record in report.records:
        config = OcpConfig(dim=1, degree=record.degree, n=2)
        if record.all_nonnegative:
            with pytest.raises(NoNegativeBasisError):
                build_certificate(config)
        else:
            certificate = build_certificate(config)
            assert certificate.ref_negative_indices == record.negative_indices


def test_certificate_d2k4_values_and_mesh_independence():
    cert4 = build_certificate(OcpConfig(dim=2, degree=4, n=4))
    cert8 = build_certificate(OcpConfig(dim=2, degree=4, n=8))

    # the d=2 degree-4 negative functions are the three edge midpoints at -1/90
    assert cert4.ref_negative_indices == (3, 5, 12)
    assert cert4.beta_exact == Fraction(1, 15)
    assert cert4.beta == pytest.approx(2.0 * 3.0 / 90.0, abs=1e-15)

    assert abs(cert4.beta - cert8.beta) <= 1e-10
    assert abs(cert4.m_squared - cert8.m_squared) <= 1e-10
    assert cert4.beta_exact == cert8.beta_exact
    assert cert4.m2_exact == cert8.m2_exact

    # step and margin follow the closed formulas
    alpha = cert4.config.alpha
    assert cert4.step == pytest.approx(cert4.beta / ((1 + alpha) * cert4.m_squared))
    assert cert4.margin == pytest.approx(cert4.beta**2 / ((1 + alpha) * cert4.m_squared))
    assert cert4.measured_objective <= cert4.objective_bound + 1e-8
    assert cert4.state_norm <= math.sqrt(cert4.m_squared) * (1 + 1e-9)


@pytest.mark.parametrize("degree", [4, 6, 7, 8])
def test_certificate_descent_bound_all_negative_degrees_d2(degree):
    # J(t_hat w) <= (1+alpha) M^2 t^2 - 2 beta t + 1 = 1 - delta for every
    # degree with a negative integral (builder enforces it; assert explicitly)
    certificate = build_certificate(OcpConfig(dim=2, degree=degree, n=2))
    assert certificate.measured_objective <= certificate.objective_bound + 1e-8
    closed_form = (
        (1 + certificate.config.alpha) * certificate.m_squared * certificate.step**2
        - 2 * certificate.beta * certificate.step
        + 1.0
    )
    assert certificate.objective_bound == pytest.approx(closed_form, abs=1e-14)


def test_certificate_matches_mesh_assembled_quantities():
    # the real content of mesh independence: the assembled coupling column
    # sums and control mass reproduce the reference-simplex rationals
    for n in (4, 8):
        disc = Discretization(OcpConfig(dim=2, degree=4, n=n))
        cert = build_certificate(disc)
        w = cert.w_coefficients
        measured_beta = -float(disc.column_sums @ w)
        measured_m2 = float(w @ (disc.control_mass @ w))
        assert measured_beta == pytest.approx(cert.beta, abs=1e-12)
        assert measured_m2 == pytest.approx(cert.m_squared, abs=1e-12)


# ---------------------------------------------------------------------------
# feasibility audit


def test_audit_of_zero_control(disc_d2k2):
    audit = feasibility_audit(disc_d2k2, np.zeros(disc_d2k2.num_control_dofs))
    assert audit.min_cell_average == 0.0
    assert audit.negative_part_norm == 0.0
    assert audit.negative_cell_fraction == 0.0


def test_audit_nonneg_coeffs_clean_for_clean_basis(disc_d2k2):
    rng = np.random.default_rng(2)
    lam = np.abs(rng.standard_normal(disc_d2k2.num_control_dofs))
    audit = feasibility_audit(disc_d2k2, lam)
    assert audit.min_cell_average >= -1e-12


def test_audit_detects_negative_cells():
    disc = Discretization(OcpConfig(dim=2, degree=4, n=4))
    solution = solve_qp(disc)
    audit = feasibility_audit(disc, solution.control)
    assert audit.min_cell_average < 0
    assert audit.negative_part_norm > 0
    assert 0 < audit.negative_cell_fraction <= 1


# ---------------------------------------------------------------------------
# convergence studies


def test_study_feasible_regime_d1():
    config = OcpConfig(dim=1, degree=7, n=4)
    study = convergence_study(config, [2, 4])
    assert study.regime == "FEASIBLE_LIMIT"
    assert study.certificate is None
    for run in study.runs:
        assert run.objective == pytest.approx(1.0, abs=1e-8)
        assert run.min_cell_average >= -1e-12


def test_study_infeasible_regime_d1():
    config = OcpConfig(dim=1, degree=8, n=4)
    study = convergence_study(config, [2, 4])
    assert study.regime == "INFEASIBLE_LIMIT"
    assert study.certificate is not None
    bound = 1.0 - study.certificate.margin
    for run in study.runs:
        assert run.objective <= bound + 1e-8
        assert run.negative_part_norm > 0


def test_study_json_schema():
    study = convergence_study(OcpConfig(dim=1, degree=8, n=4), [2, 4])
    payload = study.to_json_dict()
    assert set(payload) == {"config", "regime", "certificate", "runs"}
    assert set(payload["config"]) == {"dim", "degree", "alpha", "tol"}
    assert payload["regime"] in ("FEASIBLE_LIMIT", "INFEASIBLE_LIMIT")
    assert set(payload["certificate"]) == {"beta", "M2", "t_hat", "delta"}
    assert [r["n"] for r in payload["runs"]] == [2, 4]
    for run in payload["runs"]:
        assert set(run) == {"n", "J", "min_cell_avg", "neg_part_norm", "iters"}


def test_study_requires_two_meshes():
    with pytest.raises(ValueError):
        convergence_study(OcpConfig(dim=1, degree=2, n=4), [4])


def test_config_validation():
    with pytest.raises(ValueError):
        OcpConfig(dim=3, degree=1, n=2)
    with pytest.raises(ValueError):
        OcpConfig(dim=2, degree=0, n=2)
    with pytest.raises(ValueError):
        OcpConfig(dim=2, degree=1, n=0)
    with pytest.raises(ValueError):
        OcpConfig(dim=2, degree=1, n=2, alpha=0.0)
    with pytest.raises(ValueError):
        OcpConfig(dim=2, degree=1, n=2, qp_tol=0.0)


def test_monotonicity_objective_never_above_volume():
    for config in (OcpConfig(dim=1, degree=8, n=4), OcpConfig(dim=2, degree=4, n=4)):
        solution = solve_qp(config)
        assert solution.objective <= 1.0 + 1e-12
