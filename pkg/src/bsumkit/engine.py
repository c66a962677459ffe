"""Iteration engine: block sweeps, single-block runs, acceleration, references.

A run produces a Trace: per-iteration records plus the iterate history,
which the diagnostics later mine for distances, step norms, and
gradient-difference statistics.  Runs are strictly sequential (the
within-sweep recursion is ordered); distinct runs share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .problem import (
    Array,
    Problem,
    SmoothPart,
    UnsupportedCombination,
    eval_objective,
    feasible_start,
    make_partition,
)
from .schedule import Schedule, VirtualUpdate, make_schedule, virtual_updates
from .surrogate import prox_block


@dataclass(eq=False)
class IterationRecord:
    """One row of a run trace; statistics are None when not computed.

    step_sq is the squared move that produced this iterate, virt_step_sq the
    squared distance from the previous iterate to its all-blocks virtual
    update, grad_diff_sq the summed squared gradient differences across the
    sweep's intermediate points.
    """

    r: int
    f: float
    step_sq: Optional[float] = None
    virt_step_sq: Optional[float] = None
    grad_diff_sq: Optional[float] = None
    blocks: Optional[tuple[int, ...]] = None
    descent_slack: Optional[float] = None
    aux_step_sq: Optional[float] = None


@dataclass(eq=False)
class AccState:
    """Extrapolation state of the accelerated two-block scheme at iteration r."""

    r: int
    theta: float
    v1: Array
    w1: Array


@dataclass(eq=False)
class Trace:
    records: list[IterationRecord]
    iterates: list[Array]
    virtual_points: list[Optional[Array]]
    aux_points: list[Optional[Array]]
    meta: dict
    acc_states: list[AccState] = field(default_factory=list)
    f_star: Optional[float] = None
    x_star: Optional[Array] = None

    @property
    def n_iterations(self) -> int:
        return len(self.records) - 1

    def fvals(self) -> Array:
        return np.array([rec.f for rec in self.records])

    def deltas(self) -> Array:
        if self.f_star is None:
            raise ValueError("attach a reference solution before asking for gaps")
        return self.fvals() - self.f_star

    def attach_reference(self, x_star: Array, f_star: float) -> None:
        self.x_star = np.asarray(x_star, dtype=float)
        self.f_star = float(f_star)


def _descent_rhs(schedule: Schedule, gamma: float, step_sq: float,
                 virt_step_sq: Optional[float]) -> float:
    if schedule.rule == "gauss-southwell":
        return (schedule.q / schedule.n_blocks) * gamma * (virt_step_sq or 0.0)
    if schedule.rule == "mbi":
        return (1.0 / schedule.n_blocks) * gamma * (virt_step_sq or 0.0)
    return gamma * step_sq


def bsum_sweep(
    problem: Problem,
    surrogate,
    x: Array,
    blocks: tuple[int, ...],
    record_grads: bool = False,
    on_block_update: Optional[Callable[[int, Array], None]] = None,
) -> tuple[Array, float, Optional[float]]:
    """One iteration: update the listed blocks in order, each anchored at the
    point holding all previously updated blocks of this sweep."""
    w = np.array(x, dtype=float)
    grad_stat = None
    g_prev = None
    if record_grads:
        grad_stat = 0.0
        g_prev = problem.smooth.grad(w)
    for k in blocks:
        if on_block_update is not None:
            on_block_update(k, w.copy())
        w[problem.partition.block_slice(k)] = surrogate.argmin(k, w)
        if record_grads:
            g_now = problem.smooth.grad(w)
            diff = g_now - g_prev
            grad_stat += float(diff @ diff)
            g_prev = g_now
    d = w - x
    return w, float(d @ d), grad_stat


def run_bsum(
    problem: Problem,
    surrogate,
    schedule: Schedule,
    x0: Optional[Array] = None,
    iterations: int = 100,
    tol: float = 0.0,
    f_star: Optional[float] = None,
    record_virtual: Optional[bool] = None,
    record_grad_diffs: Optional[bool] = None,
    compute_auxiliary: bool = False,
    aux_gamma: Optional[float] = None,
    on_block_update: Optional[Callable[[int, Array], None]] = None,
    meta: Optional[dict] = None,
) -> Trace:
    """Run the block upper-bound minimization loop for a fixed budget.

    The iteration budget is the primary stopping rule; the gap tolerance
    only applies when a reference value f_star is supplied up front.
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    if schedule.n_blocks != problem.n_blocks:
        raise ValueError("schedule and problem disagree on the block count")
    if compute_auxiliary and problem.n_blocks != 1:
        raise ValueError("the auxiliary regularized step is a single-block construct")

    want_virtual = schedule.needs_virtual() if record_virtual is None else (
        record_virtual or schedule.needs_virtual()
    )
    want_grads = (surrogate.kind == "exact") if record_grad_diffs is None else record_grad_diffs
    gamma = surrogate.gamma
    aux_g = aux_gamma if aux_gamma is not None else (
        4.0 * surrogate.l_max if compute_auxiliary else None
    )

    x = feasible_start(problem) if x0 is None else np.array(x0, dtype=float)
    f = eval_objective(problem, x)
    run_meta = {
        "algorithm": "bsum",
        "rule": schedule.rule,
        "surrogate": surrogate.kind,
        "n_blocks": problem.n_blocks,
        "q": schedule.q,
        "period": schedule.period,
        "problem": problem.name,
        "warnings": [],
    }
    if meta:
        run_meta.update(meta)
    trace = Trace(
        records=[IterationRecord(r=0, f=f)],
        iterates=[x.copy()],
        virtual_points=[None],
        aux_points=[None],
        meta=run_meta,
    )

    for r in range(1, iterations + 1):
        vu: Optional[VirtualUpdate] = None
        virt_sq = None
        if want_virtual:
            vu = virtual_updates(problem, surrogate, x)
            virt_sq = float(np.sum(vu.step_norms**2))
        aux_sq = None
        aux_point = None
        if compute_auxiliary:
            cand = surrogate.argmin_regularized(0, x, aux_g)
            aux_point = cand.copy()
            aux_sq = float(np.sum((cand - x) ** 2))
        blocks = schedule.select(r - 1, vu)
        x_new, step_sq, grad_sq = bsum_sweep(
            problem, surrogate, x, blocks,
            record_grads=want_grads, on_block_update=on_block_update,
        )
        f_new = eval_objective(problem, x_new)
        slack = (f - f_new) - _descent_rhs(schedule, gamma, step_sq, virt_sq)
        trace.records.append(IterationRecord(
            r=r, f=f_new, step_sq=step_sq, virt_step_sq=virt_sq,
            grad_diff_sq=grad_sq, blocks=tuple(blocks), descent_slack=slack,
            aux_step_sq=aux_sq,
        ))
        trace.iterates.append(x_new.copy())
        trace.virtual_points.append(None if vu is None else vu.x_hat.copy())
        trace.aux_points.append(aux_point)
        x, f = x_new, f_new
        if f_star is not None and f - f_star <= tol:
            break
    return trace


def run_sum(
    problem: Problem,
    surrogate,
    x0: Optional[Array] = None,
    iterations: int = 100,
    tol: float = 0.0,
    f_star: Optional[float] = None,
    compute_auxiliary: bool = False,
    aux_gamma: Optional[float] = None,
    meta: Optional[dict] = None,
) -> Trace:
    """Single-block specialization: each iteration minimizes the bound once."""
    if problem.n_blocks != 1:
        raise ValueError("single-block runs need a one-block partition")
    schedule = make_schedule("gauss-seidel", 1)
    extra = {"algorithm": "sum"}
    if meta:
        extra.update(meta)
    return run_bsum(
        problem, surrogate, schedule, x0=x0, iterations=iterations, tol=tol,
        f_star=f_star, compute_auxiliary=compute_auxiliary, aux_gamma=aux_gamma,
        meta=extra,
    )


def run_a2bsum(
    problem: Problem,
    outer: int = 1,
    inner: int = 0,
    x0: Optional[Array] = None,
    iterations: int = 100,
    m_outer: Optional[float] = None,
    meta: Optional[dict] = None,
) -> Trace:
    """Accelerated two-block scheme with extrapolation factor 2/(r+1).

    The inner block is minimized exactly at the extrapolated outer point,
    the outer block takes a proximal step with constant m_outer, and the
    momentum point is advanced.  Recorded iterates pair the outer variable
    with a fresh exact inner solve so the trace reports the objective the
    scheme actually certifies.
    """
    if problem.n_blocks != 2:
        raise UnsupportedCombination("the accelerated scheme needs exactly two blocks")
    if {outer, inner} != {0, 1}:
        raise ValueError("outer and inner must name the two blocks")
    if problem.exact_solver is None:
        raise UnsupportedCombination("the inner block needs an exact solver")
    if iterations < 1:
        raise ValueError("need at least one iteration")
    m1 = float(m_outer) if m_outer is not None else problem.smooth.block_lipschitz[outer]
    sl_out = problem.partition.block_slice(outer)
    sl_in = problem.partition.block_slice(inner)
    warnings = []
    if problem.inner_unique is not None and not problem.inner_unique(inner):
        warnings.append("inner block minimizer may be non-unique")

    x = feasible_start(problem) if x0 is None else np.array(x0, dtype=float)
    x[sl_in] = problem.exact_solver(inner, x)
    run_meta = {
        "algorithm": "a2bsum", "rule": "gauss-seidel", "surrogate": "prox-linear",
        "n_blocks": 2, "q": 1.0, "period": 1, "problem": problem.name,
        "outer": outer, "inner": inner, "m_outer": m1, "warnings": warnings,
    }
    if meta:
        run_meta.update(meta)
    trace = Trace(
        records=[IterationRecord(r=0, f=eval_objective(problem, x))],
        iterates=[x.copy()],
        virtual_points=[None],
        aux_points=[None],
        meta=run_meta,
    )

    x1_prev = x[sl_out].copy()
    w1 = x1_prev.copy()
    h_out = problem.nonsmooth[outer]
    cs_out = problem.constraints[outer]
    work = x.copy()
    for r in range(1, iterations + 1):
        theta = 2.0 / (r + 1)
        v1 = (1.0 - theta) * x1_prev + theta * w1
        work[sl_out] = v1
        work[sl_in] = problem.exact_solver(inner, work)
        grad1 = problem.smooth.grad(work)[sl_out] if problem.smooth.block_grad_fn is None \
            else problem.smooth.block_grad_fn(outer, work)
        x1 = prox_block(h_out, cs_out, m1, v1 - grad1 / m1)
        w1 = x1_prev + (x1 - x1_prev) / theta
        trace.acc_states.append(AccState(r=r, theta=theta, v1=v1.copy(), w1=w1.copy()))
        x1_prev = x1

        rec_point = work.copy()
        rec_point[sl_out] = x1
        rec_point[sl_in] = problem.exact_solver(inner, rec_point)
        f_new = eval_objective(problem, rec_point)
        d = rec_point - trace.iterates[-1]
        trace.records.append(IterationRecord(
            r=r, f=f_new, step_sq=float(d @ d), blocks=(inner, outer),
        ))
        trace.iterates.append(rec_point.copy())
        trace.virtual_points.append(None)
        trace.aux_points.append(None)
        work = rec_point
    return trace


# ---------------------------------------------------------------------------
# two-block reduction: eliminate the exactly-minimized block


def reduce_two_block(problem: Problem, outer: int = 1, inner: int = 0) -> Problem:
    """Single-block problem over the outer variable, with the inner block
    minimized exactly inside the smooth-part oracles."""
    if problem.n_blocks != 2 or {outer, inner} != {0, 1}:
        raise ValueError("reduction applies to two-block problems only")
    if problem.exact_solver is None:
        raise UnsupportedCombination("the inner block needs an exact solver")
    sl_out = problem.partition.block_slice(outer)
    sl_in = problem.partition.block_slice(inner)
    template = feasible_start(problem)
    h_in = problem.nonsmooth[inner]
    m_out = problem.smooth.block_lipschitz[outer]

    def assemble(x1):
        y = template.copy()
        y[sl_out] = x1
        y[sl_in] = problem.exact_solver(inner, y)
        return y

    def value(x1):
        y = assemble(x1)
        return float(problem.smooth.value(y)) + h_in.value(y[sl_in])

    def grad(x1):
        y = assemble(x1)
        if problem.smooth.block_grad_fn is not None:
            return problem.smooth.block_grad_fn(outer, y)
        return problem.smooth.grad(y)[sl_out]

    reference = None
    if problem.reference_solver is not None:
        def reference():
            x_star, f_star = problem.reference_solver()
            return x_star[sl_out], f_star

    part = make_partition([problem.partition.sizes[outer]])
    smooth = SmoothPart(value=value, grad=grad, lipschitz=m_out, block_lipschitz=(m_out,))
    return Problem(
        partition=part, smooth=smooth, nonsmooth=(problem.nonsmooth[outer],),
        constraints=(problem.constraints[outer],),
        name=f"{problem.name}-reduced", reference_solver=reference,
        meta={"reduced_from": problem.name, "outer": outer, "inner": inner},
    )


# ---------------------------------------------------------------------------
# reference solutions


@dataclass(eq=False)
class ReferenceSolution:
    x: Array
    f: float
    converged: bool
    sweeps: int
    last_change: float


def _strongest_surrogate(problem: Problem):
    from .surrogate import make_surrogate

    if problem.exact_solver is not None:
        return make_surrogate(problem, "exact")
    if problem.custom_surrogate_factory is not None:
        return make_surrogate(problem, "model-custom")
    return make_surrogate(problem, "prox-linear")


def reference_solve(
    problem: Problem,
    max_sweeps: int = 60000,
    stall_tol: float = 1e-12,
    stall_sweeps: int = 50,
) -> ReferenceSolution:
    """High-accuracy minimizer for attaching gap values to traces.

    Uses a model-registered closed form when one exists; otherwise sweeps
    the strongest available per-block solver until the objective change
    stays below stall_tol for stall_sweeps consecutive sweeps.
    """
    if problem.reference_solver is not None:
        x_star, f_star = problem.reference_solver()
        return ReferenceSolution(
            x=np.asarray(x_star, dtype=float), f=float(f_star),
            converged=True, sweeps=0, last_change=0.0,
        )
    surrogate = _strongest_surrogate(problem)
    blocks = tuple(range(problem.n_blocks))
    x = feasible_start(problem)
    f = eval_objective(problem, x)
    best_x, best_f = x.copy(), f
    stall = 0
    sweeps = 0
    change = float("inf")
    while sweeps < max_sweeps and stall < stall_sweeps:
        x, _, _ = bsum_sweep(problem, surrogate, x, blocks)
        f_new = eval_objective(problem, x)
        change = f - f_new
        if f_new < best_f:
            best_f, best_x = f_new, x.copy()
        stall = stall + 1 if abs(change) <= stall_tol else 0
        f = f_new
        sweeps += 1
    return ReferenceSolution(
        x=best_x, f=best_f, converged=stall >= stall_sweeps,
        sweeps=sweeps, last_change=abs(change),
    )
