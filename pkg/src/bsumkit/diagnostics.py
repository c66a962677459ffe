"""Rate certificates and numerical verification of the descent machinery.

Given a finished trace and its reference solution, this module assembles
the constants a sublinear-rate certificate needs (curvature, step and
anchor Lipschitz constants, level-set radius and gradient bound), maps them
to each certificate's (sigma, c) pair, and checks the per-iteration descent,
cost-to-go, and rate-envelope inequalities at a fixed absolute tolerance.

Radii estimated from the trajectory are tagged sampled-bound: they make the
envelope checks stricter than the underlying statement, so a failure under
a sampled radius is inconclusive rather than a disproof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .engine import Trace
from .problem import (
    Array,
    CompositeStructure,
    Problem,
    SvmData,
    block_gradient,
    eval_objective,
    nonsmooth_lipschitz,
    project_feasible,
)

DEFAULT_TOLERANCE = 1e-9

RATE_IDS = (
    "bsum-gs", "bsum-ec", "bsum-gso", "bsum-mbi",
    "sum", "two-block", "bcm-gs", "bcm-ec", "composite-gs", "l2svm-gs",
)


@dataclass(eq=False)
class RateCertificate:
    """Constant bundle feeding the sigma formulas, with per-constant provenance."""

    gamma: float
    l_max: Optional[float]
    g_max: Optional[float]
    big_m: float
    m_max: float
    radius: float
    grad_bound: float
    l_h: float
    q: float
    period: int
    f_star: float
    f_first: float
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma, "L_max": self.l_max, "G_max": self.g_max,
            "M": self.big_m, "M_max": self.m_max, "R": self.radius,
            "Q": self.grad_bound, "L_h": self.l_h, "q": self.q, "T": self.period,
            "f_star": self.f_star, "f_first": self.f_first,
            "provenance": dict(self.provenance),
        }


@dataclass(eq=False)
class CheckReport:
    """Result of one inequality check over a trace."""

    check_id: str
    variant: str
    slacks: Array  # inequality margin per checked index; negative = violated
    max_violation: float
    tolerance: float
    passed: bool
    n_checked: int

    def to_dict(self) -> dict:
        return {
            "check": self.check_id, "variant": self.variant,
            "max_violation": self.max_violation, "tolerance": self.tolerance,
            "passed": self.passed, "n_checked": self.n_checked,
        }


def _report(check_id: str, variant: str, slacks, tolerance: float) -> CheckReport:
    slacks = np.asarray(slacks, dtype=float)
    viol = float(max(0.0, -np.min(slacks))) if slacks.size else 0.0
    return CheckReport(
        check_id=check_id, variant=variant, slacks=slacks,
        max_violation=viol, tolerance=tolerance,
        passed=viol <= tolerance, n_checked=int(slacks.size),
    )


# ---------------------------------------------------------------------------
# constants


def _trajectory_points(trace: Trace) -> list[Array]:
    pts = list(trace.iterates)
    pts += [p for p in trace.virtual_points if p is not None]
    pts += [p for p in trace.aux_points if p is not None]
    return pts


def estimate_constants(
    problem: Problem,
    surrogate,
    trace: Trace,
    samples: int = 1000,
    seed: int = 2024,
) -> RateCertificate:
    """Assemble certificate constants for a trace with an attached reference.

    The radius covers every trace point (iterates, virtual and auxiliary
    points); on fully bounded feasible sets it is replaced by the exact
    farthest-point bound.  The gradient bound is handled analogously.
    """
    if trace.f_star is None or trace.x_star is None:
        raise ValueError("estimate_constants needs the reference solution attached")
    if len(trace.records) < 2:
        raise ValueError("trace needs at least one iteration")
    x_star = trace.x_star
    prov: dict[str, str] = {
        "gamma": "declared", "L_max": "declared", "G_max": "declared",
        "M": "declared", "L_h": "computed-exact",
    }

    bounded = all(c.is_bounded() for c in problem.constraints)
    points = _trajectory_points(trace)
    if bounded:
        per_block = [
            c.max_distance_from(x_star[problem.partition.block_slice(k)])
            for k, c in enumerate(problem.constraints)
        ]
        radius = float(np.sqrt(np.sum(np.square(per_block))))
        grad_bound = float(
            np.linalg.norm(problem.smooth.grad(x_star))
            + problem.smooth.lipschitz * radius
        )
        prov["R"] = "computed-exact"
        prov["Q"] = "computed-exact"
    else:
        dists = [float(np.linalg.norm(p - x_star)) for p in points]
        grads = [float(np.linalg.norm(problem.smooth.grad(p))) for p in trace.iterates]
        f_level = trace.records[1].f
        rng = np.random.default_rng([0xB5D, seed])
        spread = max(max(dists), 1e-8)
        n_iter = len(trace.iterates)
        for _ in range(samples):
            base = trace.iterates[int(rng.integers(n_iter))]
            cand = base + rng.standard_normal(problem.dim) * (
                spread * abs(float(rng.standard_normal()))
            )
            cand = project_feasible(problem, cand)
            if eval_objective(problem, cand) <= f_level:
                dists.append(float(np.linalg.norm(cand - x_star)))
                grads.append(float(np.linalg.norm(problem.smooth.grad(cand))))
        radius = max(max(dists), 1e-12)
        grad_bound = max(grads)
        prov["R"] = "sampled-bound"
        prov["Q"] = "sampled-bound"

    return RateCertificate(
        gamma=surrogate.gamma,
        l_max=surrogate.l_max,
        g_max=surrogate.g_max,
        big_m=problem.smooth.lipschitz,
        m_max=problem.smooth.max_block_lipschitz,
        radius=radius,
        grad_bound=grad_bound,
        l_h=nonsmooth_lipschitz(problem),
        q=float(trace.meta.get("q", 1.0)),
        period=int(trace.meta.get("period", 1)),
        f_star=trace.f_star,
        f_first=trace.records[1].f,
        provenance=prov,
    )


# ---------------------------------------------------------------------------
# sigma / c table


def _pair(sigma: float, cert: RateCertificate, offset: int) -> tuple[float, float, int]:
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise ValueError("sigma must be positive and finite")
    c = max(4.0 * sigma - 2.0, cert.f_first - cert.f_star, 2.0)
    return sigma, c, offset


def sigma_for(
    rate_id: str,
    cert: RateCertificate,
    n_blocks: int,
    composite: Optional[CompositeStructure] = None,
    svm: Optional[SvmData] = None,
    lip: Optional[float] = None,
) -> tuple[float, float, int]:
    """(sigma, c, iteration offset) for one convergence certificate.

    The envelope certified is gap(r) <= (c / sigma) / (r - offset) for all
    r > offset.
    """
    K = float(n_blocks)
    R = cert.radius
    if rate_id == "bsum-gs":
        if cert.gamma <= 0 or cert.g_max is None:
            raise ValueError("certificate lacks curvature or anchor constants")
        return _pair(cert.gamma / (K * cert.g_max**2 * R**2), cert, 0)
    if rate_id == "bsum-ec":
        if cert.gamma <= 0 or cert.g_max is None:
            raise ValueError("certificate lacks curvature or anchor constants")
        return _pair(
            cert.gamma / (K * cert.period * R**2 * cert.g_max**2), cert, cert.period
        )
    if rate_id in ("bsum-gso", "bsum-mbi"):
        if cert.gamma <= 0 or cert.l_max is None:
            raise ValueError("certificate lacks curvature constants")
        qq = cert.q if rate_id == "bsum-gso" else 1.0
        denom = 2.0 * K * ((cert.grad_bound + cert.l_h) ** 2 + cert.l_max**2 * K * R**2)
        return _pair(cert.gamma * qq / denom, cert, 0)
    if rate_id in ("sum", "two-block"):
        step = lip if lip is not None else cert.l_max
        if step is None or step <= 0:
            raise ValueError("single-block certificate needs the bound's step constant")
        return _pair(1.0 / (32.0 * R**2 * step), cert, 1 if rate_id == "sum" else 2)
    if rate_id == "bcm-gs":
        return _pair(1.0 / (2.0 * cert.big_m * K**2 * R**2), cert, 0)
    if rate_id == "bcm-ec":
        return _pair(
            1.0 / (2.0 * K**2 * cert.period * R**2 * cert.big_m), cert, cert.period
        )
    if rate_id == "composite-gs":
        if composite is None:
            raise ValueError("composite certificate needs the composite structure")
        worst = float(np.max(composite.map_gram_norms * composite.cross_lipschitz**2))
        sigma = float(np.min(composite.moduli)) / (
            2.0 * K * composite.n_terms * R**2 * worst
        )
        return _pair(sigma, cert, 0)
    if rate_id == "l2svm-gs":
        if svm is None:
            raise ValueError("squared-hinge certificate needs the row data")
        row_sum = sum(svm.block_row_norm_max(k) for k in range(n_blocks))
        n_rows = svm.rows.shape[0]
        return _pair(1.0 / (8.0 * row_sum**2 * K * n_rows * R**2), cert, 0)
    raise ValueError(f"unknown rate id {rate_id!r}; expected one of {RATE_IDS}")


# ---------------------------------------------------------------------------
# inequality checks over traces


def _require(values, what: str):
    if any(v is None for v in values):
        raise ValueError(f"trace lacks {what} needed by this variant")
    return np.asarray(values, dtype=float)


def check_sufficient_descent(
    trace: Trace, cert: RateCertificate, variant: str,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CheckReport:
    """Per-iteration lower bound on the gap decrease.

    Variants: "gs-ec" (squared step against the surrogate curvature),
    "gso-mbi" (squared virtual step, scaled by the selection constant),
    "bcm" (summed squared gradient differences against 1/2M).
    """
    recs = trace.records
    if len(recs) < 2:
        raise ValueError("trace needs at least one iteration")
    drops = [recs[j - 1].f - recs[j].f for j in range(1, len(recs))]
    if variant == "gs-ec":
        steps = _require([r.step_sq for r in recs[1:]], "step norms")
        rhs = cert.gamma * steps
    elif variant == "gso-mbi":
        virt = _require([r.virt_step_sq for r in recs[1:]], "virtual step norms")
        c1 = cert.q if trace.meta.get("rule") == "gauss-southwell" else 1.0
        K = trace.meta["n_blocks"]
        rhs = (c1 / K) * cert.gamma * virt
    elif variant == "bcm":
        grads = _require([r.grad_diff_sq for r in recs[1:]], "gradient differences")
        rhs = grads / (2.0 * cert.big_m)
    else:
        raise ValueError(f"unknown descent variant {variant!r}")
    slacks = np.asarray(drops) - rhs
    return _report("sufficient-descent", variant, slacks, tolerance)


def check_cost_to_go(
    trace: Trace, cert: RateCertificate, variant: str,
    tolerance: float = DEFAULT_TOLERANCE,
) -> CheckReport:
    """Upper bound on the squared remaining gap after each iteration.

    Variants: "gs", "ec" (window of squared steps), "gso-mbi" (squared
    virtual step at the current point), "bcm-gs" (gradient differences).
    """
    if trace.f_star is None:
        raise ValueError("attach the reference solution first")
    recs = trace.records
    deltas = trace.deltas()
    K = trace.meta["n_blocks"]
    R2 = cert.radius**2
    slacks = []
    if variant == "gs":
        if cert.g_max is None:
            raise ValueError("certificate lacks the anchor Lipschitz constant")
        steps = _require([r.step_sq for r in recs[1:]], "step norms")
        for j in range(1, len(recs)):
            bound = R2 * K * cert.g_max**2 * steps[j - 1]
            slacks.append(bound - deltas[j] ** 2)
    elif variant == "ec":
        if cert.g_max is None:
            raise ValueError("certificate lacks the anchor Lipschitz constant")
        T = cert.period
        steps = _require([r.step_sq for r in recs[1:]], "step norms")
        for j in range(T, len(recs)):
            window = float(np.sum(steps[j - T:j]))
            bound = T * R2 * K * cert.g_max**2 * window
            slacks.append(bound - deltas[j] ** 2)
    elif variant == "gso-mbi":
        if cert.l_max is None:
            raise ValueError("certificate lacks the step Lipschitz constant")
        virt = _require([r.virt_step_sq for r in recs[1:]], "virtual step norms")
        coeff = 2.0 * ((cert.grad_bound + cert.l_h) ** 2 + cert.l_max**2 * K * R2)
        # bounds the squared gap at the anchor by the virtual step computed
        # from it (the next record holds that virtual step)
        for j in range(1, len(recs) - 1):
            slacks.append(coeff * virt[j] - deltas[j] ** 2)
    elif variant == "bcm-gs":
        grads = _require([r.grad_diff_sq for r in recs[1:]], "gradient differences")
        for j in range(1, len(recs)):
            slacks.append(2.0 * K**2 * R2 * grads[j - 1] - deltas[j] ** 2)
    else:
        raise ValueError(f"unknown cost-to-go variant {variant!r}")
    return _report("cost-to-go", variant, slacks, tolerance)


def check_rate_envelope(
    trace: Trace, sigma: float, c: float, offset: int = 0,
    tolerance: float = DEFAULT_TOLERANCE, label: str = "envelope",
) -> CheckReport:
    """gap(r) <= (c/sigma) / (r - offset) for every recorded r > offset."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    deltas = trace.deltas()
    slacks = [
        (c / sigma) / (j - offset) - deltas[j]
        for j in range(offset + 1, len(deltas))
    ]
    return _report("rate-envelope", label, slacks, tolerance)


def check_nesterov_inequality(
    problem: Problem, big_m: Optional[float] = None, n_pairs: int = 100,
    seed: int = 0, tolerance: float = 1e-10, scale: float = 1.0,
) -> CheckReport:
    """Smooth convexity with curvature M implies a gradient-difference bound;
    sample feasible pairs and report the worst slack."""
    big_m = problem.smooth.lipschitz if big_m is None else float(big_m)
    rng = np.random.default_rng([0xAE5, seed])
    slacks = []
    for _ in range(n_pairs):
        x = project_feasible(problem, scale * rng.standard_normal(problem.dim))
        v = project_feasible(problem, scale * rng.standard_normal(problem.dim))
        gx = problem.smooth.grad(x)
        gv = problem.smooth.grad(v)
        lhs = float(problem.smooth.value(x)) - float(problem.smooth.value(v))
        rhs = float(gv @ (x - v)) + float((gv - gx) @ (gv - gx)) / (2.0 * big_m)
        slacks.append(lhs - rhs)
    return _report("smooth-curvature", "pairs", slacks, tolerance)


def check_gradient_lipschitz(
    problem: Problem, n_pairs: int = 100, seed: int = 0,
    tolerance: float = DEFAULT_TOLERANCE, scale: float = 1.0,
) -> CheckReport:
    """Sampled validation of the declared full-gradient Lipschitz constant."""
    rng = np.random.default_rng([0x11b, seed])
    slacks = []
    for _ in range(n_pairs):
        x = project_feasible(problem, scale * rng.standard_normal(problem.dim))
        v = project_feasible(problem, scale * rng.standard_normal(problem.dim))
        lhs = float(np.linalg.norm(problem.smooth.grad(x) - problem.smooth.grad(v)))
        slacks.append(problem.smooth.lipschitz * float(np.linalg.norm(x - v)) - lhs)
    return _report("gradient-lipschitz", "pairs", slacks, tolerance)


def fd_gradient_check(
    problem: Problem, points: Sequence[Array], step: float = 1e-6,
) -> float:
    """Worst relative disagreement between block gradients and central
    finite differences of g over the given points."""
    if step <= 0:
        raise ValueError("step must be positive")
    worst = 0.0
    for x in points:
        x = np.asarray(x, dtype=float)
        analytic = np.concatenate([
            block_gradient(problem, k, x) for k in range(problem.n_blocks)
        ])
        fd = np.empty_like(analytic)
        for i in range(problem.dim):
            e = np.zeros(problem.dim)
            e[i] = step
            fd[i] = (
                float(problem.smooth.value(x + e)) - float(problem.smooth.value(x - e))
            ) / (2.0 * step)
        rel = np.abs(fd - analytic) / (1.0 + np.abs(analytic))
        worst = max(worst, float(np.max(rel)))
    return worst


def fit_decay_exponent(
    trace: Trace, burn_in: int, r_max: Optional[int] = None,
    min_delta: float = 1e-14,
) -> float:
    """Least-squares slope of log gap against log iteration index."""
    deltas = trace.deltas()
    last = len(deltas) - 1 if r_max is None else min(r_max, len(deltas) - 1)
    rs, ds = [], []
    for j in range(max(burn_in + 1, 1), last + 1):
        if deltas[j] > min_delta:
            rs.append(j)
            ds.append(deltas[j])
    if len(rs) < 20:
        raise ValueError(
            f"insufficient data: {len(rs)} usable records after burn-in {burn_in}"
        )
    slope = np.polyfit(np.log(np.asarray(rs, float)), np.log(np.asarray(ds)), 1)[0]
    return float(slope)
