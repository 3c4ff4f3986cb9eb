"""Model optimal control problem with coefficient-wise non-negative controls.

Minimizes ``||y(u) + 1||^2 + alpha ||u||^2`` over controls in a discontinuous
degree-k Lagrange space, where y(u) solves the discrete Neumann problem and
the pointwise constraint u >= 0 has been replaced by non-negativity of the
basis coefficients.  The desired state is fixed at -1, so u = 0 (objective
= domain volume) is the continuous optimum.

Whether the discrete optima stay near that value is decided by the signs of
the reference basis integrals: if some are negative, the direction built from
the negative-integral basis functions drops the objective below volume - delta
uniformly in the mesh (see :func:`build_certificate`), and the discrete optima
acquire a persistent negative part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .exactbasis import ExactPolynomial, basis_integrals
from .fem import ControlSpace, StateSolver, StateSpace, assemble_control_mass, cg_solve
from .mesh import cell_affine_map, unit_interval_mesh, unit_square_mesh
from .quadrature import simplex_rule

__all__ = [
    "ConvergenceStudy",
    "CounterexampleCertificate",
    "Discretization",
    "FeasibilityAudit",
    "NoNegativeBasisError",
    "OcpConfig",
    "QpConvergenceError",
    "QpSolution",
    "StudyRun",
    "build_certificate",
    "convergence_study",
    "estimate_operator_norm",
    "feasibility_audit",
    "minimize_nonneg_quadratic",
    "solve_qp",
]

# The target state of the model problem. Fixed: the whole point of the model
# is that (y, u) = (0, 0) is optimal yet the objective is pushed below volume
# whenever a basis integral goes negative.
DESIRED_STATE = -1.0


class NoNegativeBasisError(Exception):
    """All reference basis integrals are >= 0: no counterexample direction exists."""

    def __init__(self, dim: int, degree: int):
        super().__init__(
            f"all reference basis integrals are non-negative for d={dim}, k={degree}; "
            "discrete optima converge to the feasible optimum"
        )
        self.dim = dim
        self.degree = degree


class QpConvergenceError(RuntimeError):
    """QP iteration cap exceeded; carries the best iterate found."""

    def __init__(self, message: str, best: "QpSolution"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class OcpConfig:
    """Problem instance: dimension, control degree, mesh parameter, weights, tolerances."""

    dim: int
    degree: int
    n: int
    alpha: float = 0.1
    qp_tol: float = 1e-10
    cg_tol: float = 1e-12
    max_qp_iterations: int = 200_000

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"solves are supported for dim in {{1, 2}}, got {self.dim}")
        if self.degree < 1:
            raise ValueError(f"control degree must be >= 1, got {self.degree}")
        if self.n < 1:
            raise ValueError(f"mesh parameter must be >= 1, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not (self.qp_tol > 0 and self.cg_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_qp_iterations < 1:
            raise ValueError("max_qp_iterations must be >= 1")


class Discretization:
    """Everything assembled once for a config: mesh, spaces, operators, integrals."""

    def __init__(self, config: OcpConfig):
        self.config = config
        mesh = unit_interval_mesh(config.n) if config.dim == 1 else unit_square_mesh(config.n)
        self.mesh = mesh
        self.state_space = StateSpace(mesh)
        self.control_space = ControlSpace(mesh, config.degree)
        self.solver = StateSolver(self.state_space, self.control_space, cg_tol=config.cg_tol)
        rule = simplex_rule(config.dim, 2 * config.degree + 2)
        self.audit_rule = rule
        self.control_mass = assemble_control_mass(self.control_space, rule)
        self.column_sums = np.asarray(self.solver.coupling.sum(axis=0)).ravel()
        self.ref_integrals = basis_integrals(self.control_space.ref)
        self.domain_volume = 1.0
        self.abs_dets = np.array(
            [cell_affine_map(mesh, ci).abs_det for ci in range(mesh.num_cells)]
        )
        self._mass_ones = self.solver.mass @ np.ones(self.state_space.num_dofs)
        self._audit_tab = self.control_space.tabulate(rule.points)

    @property
    def num_control_dofs(self) -> int:
        return self.control_space.num_dofs

    def solve_state(self, lam: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        """State coefficients for control coefficients lam."""
        return self.solver.solve_state(lam, x0=x0)

    def _objective_from_state(self, lam: np.ndarray, y: np.ndarray) -> float:
        # ||y - y_d||^2 expanded exactly: y'My - 2 y_d 1'My + y_d^2 |Omega|,
        # which keeps J(0) = |Omega| free of cancellation noise
        my = self.solver.mass @ y
        return (
            float(y @ my)
            - 2.0 * DESIRED_STATE * float(my.sum())
            + DESIRED_STATE**2 * self.domain_volume
            + self.config.alpha * float(lam @ (self.control_mass @ lam))
        )

    def objective(self, lam: np.ndarray) -> float:
        """Reduced objective J(lam) via a state solve."""
        lam = np.asarray(lam, dtype=float)
        return self._objective_from_state(lam, self.solve_state(lam))

    def gradient(self, lam: np.ndarray) -> np.ndarray:
        """Reduced gradient 2 C'p + 2 alpha M_u lam with the adjoint A p = M (y - y_d)."""
        return self.gradient_objective_state(lam)[0]

    def gradient_objective_state(
        self, lam: np.ndarray, warm: dict | None = None
    ) -> tuple[np.ndarray, float, np.ndarray]:
        """(gradient, objective, state) sharing the two CG solves.

        `warm`, if given, is a mutable dict carrying the previous state and
        adjoint solutions as CG starting guesses.
        """
        lam = np.asarray(lam, dtype=float)
        y = self.solve_state(lam, x0=None if warm is None else warm.get("y"))
        my = self.solver.mass @ y
        p, _ = cg_solve(
            self.solver.operator,
            my - DESIRED_STATE * self._mass_ones,
            tol=self.config.cg_tol,
            x0=None if warm is None else warm.get("p"),
        )
        if warm is not None:
            warm["y"] = y
            warm["p"] = p
        mu_lam = self.control_mass @ lam
        g = 2.0 * (self.solver.coupling.T @ p) + 2.0 * self.config.alpha * mu_lam
        j = (
            float(y @ my)
            - 2.0 * DESIRED_STATE * float(my.sum())
            + DESIRED_STATE**2 * self.domain_volume
            + self.config.alpha * float(lam @ mu_lam)
        )
        return g, j, y


def estimate_operator_norm(matvec, n: int, max_iterations: int = 60, rtol: float = 1e-3) -> float:
    """Power-iteration estimate of the spectral norm of a symmetric PSD operator."""
    v = np.ones(n) / math.sqrt(n)
    estimate = 0.0
    for it in range(max_iterations):
        w = matvec(v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        if it >= 4 and abs(norm - estimate) <= rtol * norm:
            return norm
        estimate = norm
    return estimate


def minimize_nonneg_quadratic(
    gradient,
    g0: np.ndarray,
    j0: float,
    x0: np.ndarray,
    lipschitz: float,
    tol: float,
    max_iterations: int,
):
    """Minimize a convex quadratic over the non-negative orthant.

    `gradient` must be the (affine) gradient map of the quadratic; `g0` its
    value at 0 and `j0` the objective at 0, which recover objective values via
    J(x) = j0 + x . (g(x) + g0) / 2.  Accelerated projected gradient with
    function-value restarts; the momentum-point gradient is formed as an exact
    affine combination of stored gradients, so each step costs one gradient
    evaluation.  Terminates when the fixed-point residual
    ||x - proj(x - g/L)|| drops to `tol`.

    Returns (x, g, objective, residual, iterations); a negative iteration
    count signals that the cap was hit without reaching `tol`.
    """
    L = float(lipschitz)
    if L <= 0:
        raise ValueError("lipschitz estimate must be positive")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    x = np.maximum(np.asarray(x0, dtype=float), 0.0)
    g = gradient(x)
    j = j0 + 0.5 * float(x @ (g + g0))
    res = float(np.linalg.norm(x - np.maximum(x - g / L, 0.0)))
    if res <= tol:
        return x, g, j, res, 0

    x_prev, g_prev = x, g
    t = 1.0
    for it in range(1, max_iterations + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        gamma = (t - 1.0) / t_next
        z = x + gamma * (x - x_prev)
        gz = g + gamma * (g - g_prev)
        x_new = np.maximum(z - gz / L, 0.0)
        g_new = gradient(x_new)
        j_new = j0 + 0.5 * float(x_new @ (g_new + g0))
        if j_new > j:
            # momentum overshoot: restart with a plain projected step from x
            t_next = 1.0
            x_new = np.maximum(x - g / L, 0.0)
            g_new = gradient(x_new)
            j_new = j0 + 0.5 * float(x_new @ (g_new + g0))
        res = float(np.linalg.norm(x_new - np.maximum(x_new - g_new / L, 0.0)))
        x_prev, g_prev = x, g
        x, g, j, t = x_new, g_new, j_new, t_next
        if res <= tol:
            return x, g, j, res, it
    return x, g, j, res, -max_iterations  # negative iteration count flags the cap


@dataclass(frozen=True)
class QpSolution:
    """Solution of the coefficient-constrained QP."""

    control: np.ndarray  # lambda >= 0, length N
    state: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int


def _as_discretization(problem) -> Discretization:
    return problem if isinstance(problem, Discretization) else Discretization(problem)


def solve_qp(
    problem,
    tol: float | None = None,
    max_iterations: int | None = None,
) -> QpSolution:
    """Solve the QP ``min J(lam) s.t. lam >= 0`` by accelerated projected gradients.

    `problem` is an OcpConfig or a prebuilt Discretization.  The step size is
    1/L with L a power-iteration estimate of the Hessian norm (5% safety).
    Raises QpConvergenceError with the best iterate attached when the
    iteration cap is exceeded.
    """
    disc = _as_discretization(problem)
    cfg = disc.config
    tol = cfg.qp_tol if tol is None else tol
    max_iterations = cfg.max_qp_iterations if max_iterations is None else max_iterations

    warm: dict = {}
    n = disc.num_control_dofs
    g0, j0, _ = disc.gradient_objective_state(np.zeros(n), warm)

    def grad(x):
        return disc.gradient_objective_state(x, warm)[0]

    def hess_mv(s):
        return grad(s) - g0

    lipschitz = 1.05 * estimate_operator_norm(hess_mv, n)
    if lipschitz <= 0.0:
        raise RuntimeError("Hessian norm estimate is zero; degenerate problem")

    x, g, j, res, iters = minimize_nonneg_quadratic(
        grad, g0, j0, np.zeros(n), lipschitz, tol, max_iterations
    )
    y = disc.solve_state(x, x0=warm.get("y"))
    solution = QpSolution(
        control=x,
        state=y,
        objective=disc._objective_from_state(x, y),
        kkt_residual=res,
        iterations=abs(iters),
    )
    if iters < 0:
        raise QpConvergenceError(
            f"QP did not reach tol={tol:.3e} within {max_iterations} iterations "
            f"(residual {res:.3e})",
            solution,
        )
    return solution


@dataclass(frozen=True)
class CounterexampleCertificate:
    """Mesh-independent witness that discrete optima stay below volume - margin.

    The direction w sums the control basis functions with negative integral.
    beta = -integral of w and m_squared = ||w||^2 are computed exactly from
    reference-simplex rationals (beta_exact, m2_exact) and do not depend on
    the mesh; state_norm (= ||y(w)||) and measured_objective are measured on
    the configured mesh.  step = beta / ((1 + alpha) m_squared) and
    margin = beta * step, so J(step * w) <= volume - margin.
    """

    config: OcpConfig
    ref_negative_indices: tuple[int, ...]
    negative_indices: np.ndarray  # global control dof indices with negative integral
    w_coefficients: np.ndarray  # 0/1 coefficient vector of the direction w
    beta_exact: Fraction
    m2_exact: Fraction
    beta: float
    m_squared: float
    state_norm: float
    step: float
    margin: float
    objective_bound: float
    measured_objective: float

    def to_json_dict(self) -> dict:
        return {
            "beta": self.beta,
            "M2": self.m_squared,
            "t_hat": self.step,
            "delta": self.margin,
        }


def build_certificate(problem) -> CounterexampleCertificate:
    """Build the negative-direction certificate for a config or discretization.

    Raises NoNegativeBasisError when every reference basis integral is >= 0
    (the regime in which coefficient-wise non-negativity is preserved in the
    limit).  Cell-local signs equal reference signs because the push-forward
    only scales integrals by |det B| > 0.
    """
    disc = _as_discretization(problem)
    cfg = disc.config
    ref_ints = disc.ref_integrals
    neg_local = tuple(j for j, v in enumerate(ref_ints) if v < 0)
    if not neg_local:
        raise NoNegativeBasisError(cfg.dim, cfg.degree)

    m = disc.control_space.local_dim
    cells = disc.mesh.num_cells
    mask = np.zeros(m)
    mask[list(neg_local)] = 1.0
    w_coeffs = np.tile(mask, cells)
    negative_indices = np.flatnonzero(w_coeffs > 0)

    # Exact reference quantities; volume * |That|^{-1} = d! for the unit domains.
    fact = Fraction(math.factorial(cfg.dim))
    w_hat = ExactPolynomial.zero(cfg.dim)
    for j in neg_local:
        w_hat = w_hat + disc.control_space.ref.basis[j]
    beta_exact = -fact * w_hat.integral_over_simplex()
    m2_exact = fact * (w_hat * w_hat).integral_over_simplex()
    if beta_exact <= 0 or m2_exact <= 0:
        raise RuntimeError("certificate construction produced non-positive invariants")

    beta = float(beta_exact)
    m_squared = float(m2_exact)
    step = beta / ((1.0 + cfg.alpha) * m_squared)
    margin = beta * step
    bound = disc.domain_volume - margin

    z = disc.solve_state(w_coeffs)
    state_norm = math.sqrt(float(z @ (disc.solver.mass @ z)))
    if state_norm > math.sqrt(m_squared) * (1.0 + 1e-9) + 1e-12:
        raise RuntimeError(
            f"state norm {state_norm} exceeds the direction norm {math.sqrt(m_squared)}"
        )
    measured = disc.objective(step * w_coeffs)
    if measured > bound + 1e-8:
        raise RuntimeError(
            f"measured objective {measured} exceeds certificate bound {bound}"
        )

    return CounterexampleCertificate(
        config=cfg,
        ref_negative_indices=neg_local,
        negative_indices=negative_indices,
        w_coefficients=w_coeffs,
        beta_exact=beta_exact,
        m2_exact=m2_exact,
        beta=beta,
        m_squared=m_squared,
        state_norm=state_norm,
        step=step,
        margin=margin,
        objective_bound=bound,
        measured_objective=measured,
    )


@dataclass(frozen=True)
class FeasibilityAudit:
    """Cell-integral feasibility fingerprints of a discrete control."""

    cell_averages: np.ndarray  # (1/|T|) int_T u per cell
    min_cell_average: float
    negative_part_norm: float  # ||min(u, 0)||_{L2}, by high-order quadrature
    negative_cell_fraction: float


def feasibility_audit(problem, lam: np.ndarray) -> FeasibilityAudit:
    """Audit per-cell integrals and the negative part of a control function.

    Cell averages use the exact reference integrals (scaled by d!), so their
    signs are trustworthy; the negative-part norm uses quadrature of exactness
    2k+2 on min(u, 0)^2 and is reported as approximate.
    """
    disc = _as_discretization(problem)
    lam = np.asarray(lam, dtype=float)
    m = disc.control_space.local_dim
    lam_cells = lam.reshape(disc.mesh.num_cells, m)
    ref = np.array([float(v) for v in disc.ref_integrals])
    averages = math.factorial(disc.config.dim) * (lam_cells @ ref)

    values = lam_cells @ disc._audit_tab  # (cells, nq)
    negative = np.minimum(values, 0.0)
    norm_sq = float(disc.abs_dets @ (negative**2 @ disc.audit_rule.weights))

    return FeasibilityAudit(
        cell_averages=averages,
        min_cell_average=float(averages.min()),
        negative_part_norm=math.sqrt(max(norm_sq, 0.0)),
        negative_cell_fraction=float(np.mean(averages < 0.0)),
    )


@dataclass(frozen=True)
class StudyRun:
    n: int
    objective: float
    min_cell_average: float
    negative_part_norm: float
    iterations: int


@dataclass(frozen=True)
class ConvergenceStudy:
    """Per-mesh solve records plus the regime flag they evidence.

    FEASIBLE_LIMIT: no negative basis integral; objectives stay at the domain
    volume and the audits are clean.  INFEASIBLE_LIMIT: a certificate exists;
    objectives sit below volume - margin uniformly and the negative part of
    the optima persists under refinement.
    """

    config: OcpConfig
    regime: str
    certificate: CounterexampleCertificate | None
    runs: tuple[StudyRun, ...]

    def to_json_dict(self) -> dict:
        return {
            "config": {
                "dim": self.config.dim,
                "degree": self.config.degree,
                "alpha": self.config.alpha,
                "tol": self.config.qp_tol,
            },
            "regime": self.regime,
            "certificate": None if self.certificate is None else self.certificate.to_json_dict(),
            "runs": [
                {
                    "n": r.n,
                    "J": r.objective,
                    "min_cell_avg": r.min_cell_average,
                    "neg_part_norm": r.negative_part_norm,
                    "iters": r.iterations,
                }
                for r in self.runs
            ],
        }


def convergence_study(config: OcpConfig, mesh_parameters) -> ConvergenceStudy:
    """Solve the QP on a family of meshes and classify the limit regime."""
    ns = sorted({int(n) for n in mesh_parameters})
    if len(ns) < 2:
        raise ValueError("a convergence study needs at least two mesh parameters")
    if any(n < 1 for n in ns):
        raise ValueError("mesh parameters must be >= 1")

    certificate = None
    runs = []
    for idx, n in enumerate(ns):
        disc = Discretization(replace(config, n=n))
        if idx == 0:
            try:
                certificate = build_certificate(disc)
            except NoNegativeBasisError:
                certificate = None
        solution = solve_qp(disc)
        audit = feasibility_audit(disc, solution.control)
        runs.append(
            StudyRun(
                n=n,
                objective=solution.objective,
                min_cell_average=audit.min_cell_average,
                negative_part_norm=audit.negative_part_norm,
                iterations=solution.iterations,
            )
        )
    regime = "FEASIBLE_LIMIT" if certificate is None else "INFEASIBLE_LIMIT"
    return ConvergenceStudy(
        config=config, regime=regime, certificate=certificate, runs=tuple(runs)
    )
