"""
Damped Newton Solver

Solves the discrete coupled system for (u, v) with Dirichlet data:

1. initial guess (QUADRATIC or POISSON, see initial_guess)
2. Newton step: assemble the monolithic 2n x 2n matrix, solve J d = -R with
   preconditioned GMRES (direct solve if GMRES misses its tolerance)
3. backtracking: try x + t d for t = 1, beta, beta^2, ... and accept the
   first t that strictly lowers the residual max-norm; t < min_step stops
4. after convergence: convexity and boundary-condition reports

Time Complexity:
- per iteration: O(nnz) for assembly plus the cost of the sparse solve
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from fields.grid import EAST, WEST, UniformGrid
from fields.scalar_field import ScalarField
from fields.sym2 import det2, is_spd
from nonlinearity.coupled_rhs import CoupledRHS, Which, eval_rhs
from nonlinearity.hypotheses import SamplingBox, check_cross_monotonicity
from solver.discretization import assemble_jacobian, residual_vectors
from utils.errors import ConvexityLost, DidNotConverge, NonFiniteResult

logger = logging.getLogger(__name__)

PILOT_SAMPLES = 1024
CONVEXITY_MARGIN_CELLS = 2.0


class InitStrategy(Enum):
    QUADRATIC = "quadratic"
    POISSON = "poisson"


@dataclass(frozen=True)
class SolveConfig:
    """
    Newton parameters

    Attributes:
        newton_tol: residual max-norm at which the iteration stops
        max_iters: Newton iterations allowed
        beta: backtracking factor in (0, 1)
        min_step: smallest step length tried before giving up
        init_strategy: QUADRATIC or POISSON
        linear_solver_tol: relative residual of the GMRES sub-solves
        poisson_sweeps: Picard sweeps of the POISSON initialization
        convexity_threshold: fraction of checked nodes allowed to lose convexity
    """
    newton_tol: float = 1e-9
    max_iters: int = 25
    beta: float = 0.5
    min_step: float = 1e-6
    init_strategy: InitStrategy = InitStrategy.QUADRATIC
    linear_solver_tol: float = 1e-10
    poisson_sweeps: int = 3
    convexity_threshold: float = 0.01

    def __post_init__(self):
        if not self.newton_tol > 0.0:
            raise ValueError(f"newton_tol must be positive, got {self.newton_tol}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 < self.min_step <= 1.0:
            raise ValueError(f"min_step must lie in (0, 1], got {self.min_step}")
        if not self.linear_solver_tol > 0.0:
            raise ValueError(f"linear_solver_tol must be positive, got {self.linear_solver_tol}")
        if isinstance(self.init_strategy, str):
            object.__setattr__(self, "init_strategy", InitStrategy(self.init_strategy.lower()))


@dataclass
class ConvexityReport:
    """
    Positive definiteness of the discrete Hessians at the final iterate

    Only nodes farther than two cells from the boundary are checked.
    """
    spd_u: np.ndarray
    spd_v: np.ndarray
    checked: np.ndarray
    violations_u: int
    violations_v: int
    fraction: float
    cross_fallback_nodes: int

    @property
    def passed(self) -> bool:
        return self.violations_u == 0 and self.violations_v == 0

    @property
    def violations(self) -> int:
        return self.violations_u + self.violations_v


@dataclass
class BoundaryMonotonicityReport:
    """
    Row-scan check of the boundary condition

    Along every grid row, a boundary value must exceed every interior value
    to its right and be at least every boundary value to its right, both up
    to tol. Margins are the smallest observed differences.
    """
    passed_u: bool
    passed_v: bool
    interior_margin_u: float
    interior_margin_v: float
    boundary_margin_u: float
    boundary_margin_v: float
    tol: float
    witness_u: Optional[Tuple[float, float]] = None
    witness_v: Optional[Tuple[float, float]] = None

    @property
    def passed(self) -> bool:
        return self.passed_u and self.passed_v


@dataclass
class SolveResult:
    u: ScalarField
    v: ScalarField
    residual_history: List[float]
    convexity_report: Optional[ConvexityReport]
    boundary_monotonicity_report: Optional[BoundaryMonotonicityReport]
    converged: bool
    step_lengths: List[float] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.residual_history) - 1

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]


# initial guesses

def _laplace_blocks(grid: UniformGrid):
    lap = grid.operators.laplacian
    return lap[:, :grid.n].tocsc(), lap[:, grid.n:]


def _harmonic_fill(grid: UniformGrid, source: np.ndarray, aux_values: np.ndarray) -> np.ndarray:
    """Solve the discrete Poisson problem Lap w = source with w = aux_values at auxiliary points"""
    inner, outer = _laplace_blocks(grid)
    b = source - (outer @ aux_values if outer.shape[1] else 0.0)
    return spla.spsolve(inner, b)


def _quadratic_guess(grid: UniformGrid, boundary: ScalarField, which: Which, rhs: CoupledRHS,
                     boundary_other: ScalarField) -> Tuple[ScalarField, float]:
    aux = grid.operators.aux_points
    n_cut = grid.operators.n_cut
    if n_cut:
        tu = boundary.aux_values[:n_cut] if which is Which.G else boundary_other.aux_values[:n_cut]
        tv = boundary_other.aux_values[:n_cut] if which is Which.G else boundary.aux_values[:n_cut]
        zeros = np.zeros(n_cut)
        g = eval_rhs(rhs, which, tu, tv, zeros, zeros).value
        kappa = max(1.0, float(np.sqrt(np.max(np.abs(g)))))
    else:
        kappa = 1.0
    q_nodes = 0.5 * kappa * np.sum(grid.points ** 2, axis=1)
    q_aux = 0.5 * kappa * np.sum(aux ** 2, axis=1)
    correction = _harmonic_fill(grid, np.zeros(grid.n), boundary.aux_values - q_aux)
    return boundary.with_values(q_nodes + correction), kappa


def initial_guess(grid: UniformGrid, rhs: CoupledRHS, boundary_u: ScalarField, boundary_v: ScalarField,
                  strategy: InitStrategy = InitStrategy.QUADRATIC,
                  sweeps: int = 3) -> Tuple[ScalarField, ScalarField]:
    """
    Convex starting pair matching the boundary data

    QUADRATIC: kappa |x|^2 / 2 plus the harmonic correction that restores the
    boundary data, kappa = max(1, sqrt(sup |g|)) over the cut points, so that
    det D^2 (kappa |x|^2 / 2) = kappa^2 matches sup |g|.

    POISSON: the QUADRATIC guess followed by Picard sweeps
        Lap u_new = sqrt(max((Lap u)^2 - 4 det D^2 u - 4 g, 0))
    whose fixed points satisfy det D^2 u + g = 0 when u is convex.
    """
    u, kappa_u = _quadratic_guess(grid, boundary_u, Which.G, rhs, boundary_v)
    v, kappa_v = _quadratic_guess(grid, boundary_v, Which.F, rhs, boundary_u)
    logger.debug("quadratic guess: kappa_u=%.4g kappa_v=%.4g", kappa_u, kappa_v)
    if strategy is InitStrategy.QUADRATIC:
        return u, v

    for sweep in range(sweeps):
        targets = []
        for field_, which in ((u, Which.G), (v, Which.F)):
            hess = field_.hessian_field()
            p1, p2 = field_.gradient_field()
            g = eval_rhs(rhs, which, u.values, v.values, p1, p2).value
            lap = hess.trace
            det = det2(hess)
            targets.append(np.sqrt(np.maximum(lap ** 2 - 4.0 * det - 4.0 * g, 0.0)))
        u = u.with_values(_harmonic_fill(grid, targets[0], u.aux_values))
        v = v.with_values(_harmonic_fill(grid, targets[1], v.aux_values))
        logger.debug("poisson sweep %d done", sweep + 1)
    return u, v


# linear algebra

def _solve_linear(matrix: sparse.csr_matrix, b: np.ndarray, tol: float) -> np.ndarray:
    """Preconditioned GMRES, verified on the true residual, with a direct fallback"""
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return np.zeros_like(b)
    try:
        ilu = spla.spilu(matrix.tocsc(), drop_tol=1e-5, fill_factor=20)
        precond = spla.LinearOperator(matrix.shape, ilu.solve)
        x, info = spla.gmres(matrix, b, rtol=tol, atol=0.0, restart=60, maxiter=200, M=precond)
        true_residual = float(np.linalg.norm(matrix @ x - b))
        if info == 0 and true_residual <= 10.0 * tol * norm_b:
            return x
        logger.warning("gmres missed tolerance (info=%d, relative residual %.2e); solving directly",
                       info, true_residual / norm_b)
    except RuntimeError as exc:
        logger.warning("incomplete factorization failed (%s); solving directly", exc)
    return spla.spsolve(matrix.tocsc(), b)


def _residual_norm(u: ScalarField, v: ScalarField, rhs: CoupledRHS):
    try:
        r_u, r_v = residual_vectors(u, v, rhs)
    except NonFiniteResult:
        return np.inf, None
    norm = max(float(np.max(np.abs(r_u))), float(np.max(np.abs(r_v))))
    if not np.isfinite(norm):
        return np.inf, None
    return norm, np.concatenate([r_u, r_v])


# reports

def convexity_report(u: ScalarField, v: ScalarField) -> ConvexityReport:
    grid = u.grid
    checked = grid.away_from_boundary(CONVEXITY_MARGIN_CELLS * grid.h)
    spd_u = np.asarray(is_spd(u.hessian_field()), dtype=bool)
    spd_v = np.asarray(is_spd(v.hessian_field()), dtype=bool)
    bad_u = int(np.sum(checked & ~spd_u))
    bad_v = int(np.sum(checked & ~spd_v))
    total = int(np.sum(checked))
    fraction = float(np.sum(checked & ~(spd_u & spd_v))) / total if total else 0.0
    return ConvexityReport(
        spd_u=spd_u,
        spd_v=spd_v,
        checked=checked,
        violations_u=bad_u,
        violations_v=bad_v,
        fraction=fraction,
        cross_fallback_nodes=int(np.sum(grid.operators.cross_fallback)),
    )


def _row_scan(w: ScalarField, tol: float):
    """Worst interior and boundary margins of one field over all grid rows"""
    grid = w.grid
    aux = w.aux_values
    worst_inner, worst_pair = np.inf, np.inf
    witness_inner = witness_pair = None
    rows = grid.ij[:, 1]
    for j in np.unique(rows):
        nodes = np.flatnonzero(rows == j)
        xs = [grid.points[nodes, 0]]
        vals = [w.values[nodes]]
        kinds = [np.zeros(len(nodes), dtype=bool)]
        for arm, sign in ((WEST, -1.0), (EAST, 1.0)):
            cut = nodes[grid.arm_aux[nodes, arm] >= 0]
            xs.append(grid.points[cut, 0] + sign * grid.arms[cut, arm] * grid.h)
            vals.append(aux[grid.arm_aux[cut, arm]])
            kinds.append(np.ones(len(cut), dtype=bool))
        x = np.concatenate(xs)
        val = np.concatenate(vals)
        is_boundary = np.concatenate(kinds)
        order = np.argsort(x, kind="stable")
        val, is_boundary = val[order], is_boundary[order]
        x = x[order]

        # suffix maxima strictly to the right
        inner_vals = np.where(is_boundary, -np.inf, val)
        bnd_vals = np.where(is_boundary, val, -np.inf)
        inner_right = np.append(np.maximum.accumulate(inner_vals[::-1])[::-1][1:], -np.inf)
        bnd_right = np.append(np.maximum.accumulate(bnd_vals[::-1])[::-1][1:], -np.inf)

        b = np.flatnonzero(is_boundary)
        if len(b) == 0:
            continue
        inner_margin = val[b] - inner_right[b]
        pair_margin = val[b] - bnd_right[b]
        row_x2 = float(grid.coordinates(0, j)[1])
        k = int(np.argmin(inner_margin))
        if inner_margin[k] < worst_inner:
            worst_inner = float(inner_margin[k])
            witness_inner = (float(x[b[k]]), row_x2)
        k = int(np.argmin(pair_margin))
        if pair_margin[k] < worst_pair:
            worst_pair = float(pair_margin[k])
            witness_pair = (float(x[b[k]]), row_x2)

    witness = None
    if worst_inner <= -tol:
        witness = witness_inner
    elif worst_pair < -tol:
        witness = witness_pair
    return worst_inner, worst_pair, witness


def boundary_monotonicity_report(u: ScalarField, v: ScalarField,
                                 tol: Optional[float] = None) -> BoundaryMonotonicityReport:
    """
    Check that boundary values dominate the interior values and boundary
    values to their right on the same horizontal line

    Args:
        tol: slack, 10 h^2 (max|u| + max|v|) by default
    """
    h = u.grid.h
    if tol is None:
        scale = u.max_abs() + v.max_abs()
        tol = 10.0 * h * h * (scale if scale > 0.0 else 1.0)
    inner_u, pair_u, witness_u = _row_scan(u, tol)
    inner_v, pair_v, witness_v = _row_scan(v, tol)
    return BoundaryMonotonicityReport(
        passed_u=inner_u > -tol and pair_u >= -tol,
        passed_v=inner_v > -tol and pair_v >= -tol,
        interior_margin_u=inner_u,
        interior_margin_v=inner_v,
        boundary_margin_u=pair_u,
        boundary_margin_v=pair_v,
        tol=tol,
        witness_u=witness_u,
        witness_v=witness_v,
    )


# driver

def newton_solve(domain, grid: UniformGrid, rhs: CoupledRHS, boundary_u, boundary_v,
                 config: Optional[SolveConfig] = None, seed: int = 0) -> SolveResult:
    """
    Damped Newton iteration for the coupled system

    Args:
        domain: Domain2D the grid was built on
        grid: UniformGrid
        rhs: coupling pair
        boundary_u, boundary_v: Dirichlet data as callables (x1, x2) -> value
        config: SolveConfig, defaults when omitted
        seed: seed of the pilot hypothesis check

    Returns:
        SolveResult

    Raises:
        DidNotConverge: max_iters reached or no acceptable step
        ConvexityLost: too many checked nodes with a non-SPD Hessian
    """
    config = config or SolveConfig()
    if grid.domain is not domain:
        logger.debug("grid was built on %s, solving on %s", grid.domain.name, domain.name)
    n = grid.n
    zero = np.zeros(n)
    bu = ScalarField(grid, zero, boundary_u)
    bv = ScalarField(grid, zero, boundary_v)
    u, v = initial_guess(grid, rhs, bu, bv, config.init_strategy, config.poisson_sweeps)

    pilot = check_cross_monotonicity(rhs, SamplingBox.from_fields(u, v), n=PILOT_SAMPLES, seed=seed)
    if not pilot.passed:
        logger.warning("rhs %s is not cross monotone on the pilot box (witness %s)",
                       rhs.name, pilot.witness)

    norm, r = _residual_norm(u, v, rhs)
    if r is None:
        raise DidNotConverge(0, norm, "initial guess has a non-finite residual")
    history = [norm]
    steps: List[float] = []
    logger.info("newton start: residual=%.3e n=%d", norm, n)

    while norm > config.newton_tol:
        iteration = len(history)
        if iteration > config.max_iters:
            raise DidNotConverge(config.max_iters, norm)
        jac = assemble_jacobian(u, v, rhs)
        delta = _solve_linear(jac, -r, config.linear_solver_tol)
        du, dv = delta[:n], delta[n:]

        t = 1.0
        while True:
            trial_u = u.with_values(u.values + t * du) if np.all(np.isfinite(du)) else None
            trial_v = v.with_values(v.values + t * dv) if np.all(np.isfinite(dv)) else None
            if trial_u is None or trial_v is None:
                raise DidNotConverge(iteration, norm, "linear solve returned non-finite values")
            trial_norm, trial_r = _residual_norm(trial_u, trial_v, rhs)
            if trial_norm < norm:
                break
            t *= config.beta
            if t < config.min_step:
                raise DidNotConverge(iteration, norm, f"step below min_step={config.min_step:g}")

        u, v, norm, r = trial_u, trial_v, trial_norm, trial_r
        history.append(norm)
        steps.append(t)
        logger.info("newton iter %d: residual=%.3e step=%.3g", iteration, norm, t)

    convexity = convexity_report(u, v)
    result = SolveResult(
        u=u,
        v=v,
        residual_history=history,
        convexity_report=convexity,
        boundary_monotonicity_report=boundary_monotonicity_report(u, v),
        converged=True,
        step_lengths=steps,
    )
    if convexity.fraction > config.convexity_threshold:
        raise ConvexityLost(convexity.fraction, result)
    if convexity.violations:
        logger.warning("convexity lost at %d checked nodes (fraction %.4f)",
                       convexity.violations, convexity.fraction)
    return result
