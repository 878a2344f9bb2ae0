"""Outer fixed-point loop coupling the convective field to the frozen solver.

One outer step freezes the fractional gradient at the current iterate,
solves the resulting unconstrained problem, and relaxes toward the output.
The iteration is monitored by an empirical growth bound on the map: a fit
of  seminorm(T v)^p <= C (1 + seminorm(v)^(zeta p'))  over random inputs
yields an invariance radius that every iterate must respect.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .frozen import (
    FrozenProblem,
    FrozenSolveResult,
    default_frozen_options,
    solve_frozen,
    weak_residual,
)
from .gagliardo import OperatorParams, assemble_weights, seminorm
from .grids import Grid, ScalarField
from .optimize import MinimizerOptions
from .reaction import (
    ConvectiveReaction,
    ProblemExponents,
    SingularReaction,
    TruncatedReaction,
)
from .riesz import ConvolutionPlan, plan_riesz_convolution, riesz_gradient
from .torsion import SubsolutionCertificate, select_sigma

_MIN_THETA = 1.0 / 16.0
_INCREASE_STREAK = 3
_BALL_SLACK = 1.0 + 1e-9


@dataclass(frozen=True)
class OuterOptions:
    """Relaxation weight, stopping tolerance on the (s1,p) step seminorm,
    iteration budget, and the growth-bound monitor switch."""

    theta: float = 0.5
    tol: float = 1e-6
    max_outer: int = 40
    ball_monitor: bool = True

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"relaxation weight must lie in (0, 1], got {self.theta}")
        if self.tol <= 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.max_outer < 1:
            raise ValueError(f"iteration budget must be positive, got {self.max_outer}")


@dataclass(frozen=True)
class GrowthBound:
    """Empirical constant and invariance radius of the frozen-solve map."""

    c_emp: float
    rho: float
    exponent: float


@dataclass
class ProblemInstance:
    """Everything a solve needs: grid, exponents, reactions, assembled
    operator tables, floor certificate, and the convolution plan for the
    fractional gradient."""

    grid: Grid
    exponents: ProblemExponents
    reaction: SingularReaction
    convective: ConvectiveReaction
    tables: tuple
    certificate: SubsolutionCertificate
    trunc: TruncatedReaction
    plan: ConvolutionPlan
    frozen_options: MinimizerOptions


@dataclass
class SolveReport:
    """Outcome of the outer iteration with per-step diagnostics."""

    u: ScalarField
    raw: ScalarField
    converged: bool
    outer_iterations: int
    step_seminorms: list
    frozen_residuals: list
    full_residuals: list
    v_norms: list
    thetas: list
    final_residual: float
    hopf_ratio: float
    ball: GrowthBound | None
    log: list = field(default_factory=list)
    message: str = ""

    def history_rows(self):
        """One dict per outer iteration, aligned for tabular output."""
        rows = []
        for k in range(len(self.step_seminorms)):
            rows.append(
                {
                    "k": k + 1,
                    "step_seminorm": self.step_seminorms[k],
                    "frozen_residual": self.frozen_residuals[k],
                    "full_residual": self.full_residuals[k],
                    "v_norm": self.v_norms[k + 1],
                }
            )
        return rows


def build_instance(
    grid: Grid,
    exponents: ProblemExponents,
    reaction: SingularReaction,
    convective: ConvectiveReaction,
    frozen_options: MinimizerOptions | None = None,
    epsilon: float | None = None,
) -> ProblemInstance:
    """Assemble both operator tables, certify a floor, and precompute the
    convolution plan for the convective gradient order."""
    tables = (
        assemble_weights(grid, OperatorParams(s=exponents.s1, p=exponents.p)),
        assemble_weights(grid, OperatorParams(s=exponents.s2, p=exponents.q)),
    )
    certificate = select_sigma(reaction, exponents, grid, tables, epsilon=epsilon)
    trunc = TruncatedReaction(reaction, certificate.lower)
    plan = plan_riesz_convolution(grid, 1.0 - exponents.s)
    if frozen_options is None:
        frozen_options = default_frozen_options(grid)
    return ProblemInstance(
        grid=grid,
        exponents=exponents,
        reaction=reaction,
        convective=convective,
        tables=tables,
        certificate=certificate,
        trunc=trunc,
        plan=plan,
        frozen_options=frozen_options,
    )


def _as_field(instance: ProblemInstance, v) -> ScalarField:
    if isinstance(v, ScalarField):
        return v
    return instance.grid.unpack(np.asarray(v, dtype=float))


def frozen_at(instance: ProblemInstance, v) -> FrozenProblem:
    """Frozen problem whose convective field is evaluated at v."""
    vf = _as_field(instance, v)
    xi = riesz_gradient(instance.grid, vf, instance.exponents.s, plan=instance.plan)
    return FrozenProblem(
        grid=instance.grid,
        exponents=instance.exponents,
        trunc=instance.trunc,
        convective=instance.convective,
        xi=xi,
        tables=instance.tables,
    )


def apply_T(instance: ProblemInstance, v) -> FrozenSolveResult:
    """One fixed-point map evaluation: freeze the gradient at v, solve."""
    return solve_frozen(frozen_at(instance, v), instance.frozen_options)


def relaxed_update(v: np.ndarray, t: np.ndarray, theta: float) -> np.ndarray:
    """(1 - theta) v + theta t; theta = 1 returns t exactly."""
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if theta == 1.0:
        return t.copy()
    return v + theta * (t - v)


def verify_solution(instance: ProblemInstance, u) -> float:
    """Scaled weak residual of the fully coupled problem: the convective
    field is recomputed from u itself, nothing is frozen."""
    uf = _as_field(instance, u)
    return weak_residual(frozen_at(instance, uf), uf)


def fit_growth_bound(
    instance: ProblemInstance, count: int = 20, seed: int = 0
) -> GrowthBound:
    """Fit  seminorm(T v)^p <= c_emp (1 + seminorm(v)^exponent)  over random
    fields spanning two decades of size, then solve for the smallest radius
    rho with  c_emp (1 + rho^exponent) <= rho^p."""
    e = instance.exponents
    exponent = instance.convective.zeta * e.p_prime
    if exponent >= e.p:
        warnings.warn(
            f"growth exponent zeta*p' = {exponent:.6g} is not below p = {e.p}; "
            "no finite invariance radius exists"
        )
        return GrowthBound(c_emp=math.nan, rho=math.inf, exponent=exponent)
    rng = np.random.default_rng(seed)
    grid = instance.grid
    tp = instance.tables[0]
    c_emp = 0.0
    for lam in np.logspace(-1.5, 0.5, count):
        z = rng.standard_normal(grid.n_interior)
        v = lam * z / seminorm(tp, z)
        result = apply_T(instance, v)
        if not result.converged:
            warnings.warn(
                f"growth-bound sample at seminorm {lam:.3g} did not converge; skipped"
            )
            continue
        tnorm = seminorm(tp, grid.pack(result.raw))
        c_emp = max(c_emp, tnorm**e.p / (1.0 + lam**exponent))
    if c_emp <= 0.0:
        warnings.warn("growth-bound fit produced no usable samples")
        return GrowthBound(c_emp=math.nan, rho=math.inf, exponent=exponent)

    def gap(rho):
        return rho**e.p - c_emp * (1.0 + rho**exponent)

    lo = 1e-8
    while gap(lo) >= 0.0 and lo > 1e-300:
        lo *= 1e-2
    hi = 1.0
    while gap(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e12:
            warnings.warn("invariance radius exceeds 1e12; monitor disabled")
            return GrowthBound(c_emp=c_emp, rho=math.inf, exponent=exponent)
    rho = float(brentq(gap, lo, hi, xtol=1e-14, rtol=1e-14))
    return GrowthBound(c_emp=c_emp, rho=rho, exponent=exponent)


def _ball_check(norm: float, ball: GrowthBound | None, where: str) -> None:
    if ball is None or not math.isfinite(ball.rho):
        return
    if norm > ball.rho * _BALL_SLACK:
        raise RuntimeError(
            f"ball monitor violation at {where}: iterate seminorm {norm:.6g} "
            f"exceeds the invariance radius {ball.rho:.6g} fitted with "
            f"c_emp = {ball.c_emp:.6g}; the iteration left the certified ball"
        )


def solve_problem(
    instance: ProblemInstance,
    options: OuterOptions | None = None,
    ball: GrowthBound | None = None,
    seed: int = 0,
) -> SolveReport:
    """Relaxed fixed-point iteration  v <- (1-theta) v + theta T(v)  from the
    certified floor, stopping when the (s1,p) seminorm of the update falls
    below the outer tolerance."""
    opts = options or OuterOptions()
    grid = instance.grid
    tp = instance.tables[0]
    floor = instance.trunc.floor

    if ball is None and opts.ball_monitor:
        ball = fit_growth_bound(instance, count=20, seed=seed)
        if not math.isfinite(ball.rho):
            ball = None

    v = floor.copy()
    log: list = []
    step_seminorms: list = []
    frozen_residuals: list = []
    full_residuals: list = []
    thetas: list = []
    v_norms = [seminorm(tp, v)]
    _ball_check(v_norms[0], ball, "the starting iterate")

    theta = opts.theta
    streak = 0
    prev_step = math.inf
    converged = False
    message = ""
    last_result: FrozenSolveResult | None = None
    iterations = 0

    for k in range(1, opts.max_outer + 1):
        result = apply_T(instance, v)
        iterations = k
        last_result = result
        frozen_residuals.append(result.residual)
        full_residuals.append(verify_solution(instance, result.raw))
        if not result.converged:
            message = f"frozen solve failed at outer iteration {k}: {result.message}"
            step_seminorms.append(math.nan)
            thetas.append(theta)
            v_norms.append(v_norms[-1])
            break
        t = grid.pack(result.raw)
        v_new = relaxed_update(v, t, theta)
        step = seminorm(tp, v_new - v)
        step_seminorms.append(step)
        thetas.append(theta)
        v_norms.append(seminorm(tp, v_new))
        _ball_check(v_norms[-1], ball, f"outer iteration {k}")

        if step > prev_step:
            streak += 1
        else:
            streak = 0
        if streak >= _INCREASE_STREAK and theta > _MIN_THETA:
            theta = max(theta / 2.0, _MIN_THETA)
            streak = 0
            log.append(
                f"outer {k}: step seminorm grew {_INCREASE_STREAK} times in a row; "
                f"relaxation damped to theta = {theta:.6g}"
            )
        prev_step = step
        v = v_new
        if step < opts.tol:
            converged = True
            break
    else:
        message = (
            f"outer iteration budget {opts.max_outer} exhausted; "
            f"last step seminorm {prev_step:.3e} above tolerance {opts.tol:.3e}"
        )

    raw_vec = grid.pack(last_result.raw) if last_result is not None else v
    clipped = np.maximum(raw_vec, floor)
    u_field = grid.unpack(clipped)
    final_residual = verify_solution(instance, u_field)
    d = grid.pack(grid.distance_field())
    hopf = float(np.min(clipped / d**instance.certificate.exponent))

    return SolveReport(
        u=u_field,
        raw=grid.unpack(raw_vec),
        converged=converged,
        outer_iterations=iterations,
        step_seminorms=step_seminorms,
        frozen_residuals=frozen_residuals,
        full_residuals=full_residuals,
        v_norms=v_norms,
        thetas=thetas,
        final_residual=final_residual,
        hopf_ratio=hopf,
        ball=ball,
        log=log,
        message=message,
    )
