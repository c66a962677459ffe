"""Concrete problem instances with exact block solvers and declared constants.

Families: least squares with l1 penalty (scalar blocks), grouped least
squares with l2-norm penalties (rank-deficient blocks allowed), sparse
logistic regression, squared-hinge SVM loss, smoothed sums of norms solved
by iterative reweighting, and synthetic PSD quadratics.  Dense storage
throughout; instances are desk scale.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .problem import (
    Array,
    BlockPartition,
    CompositeStructure,
    ConstraintSet,
    IrlsData,
    NonsmoothBlock,
    Problem,
    SmoothPart,
    SvmData,
    UnsupportedCombination,
    all_space,
    make_partition,
)
from .surrogate import prox_block


# ---------------------------------------------------------------------------
# spectral helpers

POWER_TOL = 1e-10
POWER_MAX_ITER = 10000


def spectral_norm_psd(S: Array, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if n == 1:
        return float(abs(S[0, 0]))
    v = 1.0 + 0.001 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = S @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = float(v @ (S @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    return lam


def _constraint_interval(cs: ConstraintSet) -> tuple[float, float]:
    """Scalar constraint sets as an interval."""
    if cs.kind == "all-space":
        return (-np.inf, np.inf)
    if cs.kind == "box":
        return (float(cs.lo[0]), float(cs.hi[0]))
    if cs.kind == "nonneg":
        return (0.0, np.inf)
    if cs.kind == "ball":
        c = float(cs.center[0])
        return (c - cs.radius, c + cs.radius)
    raise ValueError(f"unknown constraint kind {cs.kind!r}")


def _default_constraints(partition: BlockPartition, constraints) -> tuple[ConstraintSet, ...]:
    if constraints is None:
        return tuple(all_space(s) for s in partition.sizes)
    constraints = tuple(constraints)
    if len(constraints) != partition.n_blocks:
        raise ValueError("one constraint set per block required")
    return constraints


def _quad_sum(A: Array, x: Array) -> Array:
    return A @ x


# ---------------------------------------------------------------------------
# one-dimensional piecewise-quadratic minimization (exact, by breakpoint scan)


def piecewise_quadratic_min(
    c: Array,
    d: Array,
    lam: float = 0.0,
    lo: float = -np.inf,
    hi: float = np.inf,
    shift: Optional[tuple[float, float]] = None,
) -> float:
    """Minimize sum_i max(0, c_i - d_i t)^2 + lam|t| (+ optional quadratic shift).

    The objective is convex piecewise quadratic; every piece is minimized in
    closed form between breakpoints and the best candidate wins.  Ties break
    toward the smallest |t|, then the smallest t, for deterministic traces.
    """
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    gamma, center = shift if shift is not None else (0.0, 0.0)

    knots = []
    nz = d != 0.0
    if np.any(nz):
        knots.extend((c[nz] / d[nz]).tolist())
    if lam > 0.0:
        knots.append(0.0)
    knots = [t for t in knots if lo < t < hi]
    knots = np.unique(np.asarray(knots, dtype=float)) if knots else np.empty(0)

    cands = list(knots)
    if np.isfinite(lo):
        cands.append(lo)
    if np.isfinite(hi):
        cands.append(hi)

    edges = np.concatenate(([lo], knots, [hi]))
    for i in range(len(edges) - 1):
        a, b = edges[i], edges[i + 1]
        if not a < b:
            continue
        if np.isfinite(a) and np.isfinite(b):
            mid = 0.5 * (a + b)
        elif np.isfinite(a):
            mid = a + 1.0
        elif np.isfinite(b):
            mid = b - 1.0
        else:
            mid = 0.0
        act = (c - d * mid) > 0.0
        sgn = 0.0 if lam == 0.0 else float(np.sign(mid))
        quad = 2.0 * float(np.sum(d[act] ** 2)) + gamma
        cross = 2.0 * float(np.sum(c[act] * d[act])) + gamma * center
        if quad > 0.0:
            cands.append(min(max((cross - lam * sgn) / quad, a), b))
        else:
            slope = lam * sgn - cross
            if slope > 0.0 and np.isfinite(a):
                cands.append(a)
            elif slope < 0.0 and np.isfinite(b):
                cands.append(b)
            else:
                cands.append(min(max(0.0, a), b))

    ts = np.asarray(cands, dtype=float)
    ts = ts[np.isfinite(ts)]
    if ts.size == 0:
        return 0.0
    vals = np.sum(np.maximum(c[:, None] - d[:, None] * ts[None, :], 0.0) ** 2, axis=0)
    vals += lam * np.abs(ts) + 0.5 * gamma * (ts - center) ** 2
    order = np.lexsort((ts, np.abs(ts), vals))
    return float(ts[order[0]])


# ---------------------------------------------------------------------------
# l2-norm block subproblem (exact, by a one-dimensional secular equation)


def group_l2_block_min(evals: Array, vecs: Array, target: Array, weight: float,
                       shift: Optional[tuple[float, Array]] = None) -> Array:
    """argmin_u ||A u - rho||^2 + weight ||u|| (+ optional quadratic shift).

    evals/vecs is the eigendecomposition of A^T A and target equals A^T rho.
    Rank-deficient A is allowed; the weight == 0 branch returns the
    minimum-norm least-squares solution.
    """
    gamma, gc = (0.0, None) if shift is None else shift
    rhs = 2.0 * target + (gamma * gc if gc is not None else 0.0)
    z = vecs.T @ rhs
    dvals = 2.0 * evals + gamma
    if weight == 0.0:
        cut = 1e-12 * max(float(np.max(dvals)), 1.0)
        coef = np.where(dvals > cut, z / np.where(dvals > cut, dvals, 1.0), 0.0)
        return vecs @ coef
    znorm = float(np.linalg.norm(z))
    if znorm <= weight:
        return np.zeros_like(z)

    def excess(s: float) -> float:
        return float(np.sum((z / (dvals * s + weight)) ** 2)) - 1.0

    hi = max(1.0, znorm / weight)
    while excess(hi) > 0.0:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("secular equation failed to bracket")
    s = brentq(excess, 0.0, hi, xtol=1e-14 * (1.0 + hi), rtol=8.9e-16, maxiter=200)
    return vecs @ (z * s / (dvals * s + weight))


# ---------------------------------------------------------------------------
# least squares + l1 (scalar blocks carry an exact soft-threshold solve)


def build_lasso(A, b, lam: float, block_sizes=None, constraints=None) -> Problem:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError("need A of shape (m, n) and b of length m")
    if lam < 0:
        raise ValueError("l1 weight must be nonnegative")
    m, n = A.shape
    part = make_partition(block_sizes if block_sizes is not None else [1] * n)
    if part.dim != n:
        raise ValueError("block sizes must partition the columns of A")
    cons = _default_constraints(part, constraints)
    gram = A.T @ A

    def value(x):
        r = A @ x - b
        return float(r @ r)

    def grad(x):
        return 2.0 * (A.T @ (A @ x - b))

    def block_grad(k, x):
        sl = part.block_slice(k)
        return 2.0 * (A[:, sl].T @ (A @ x - b))

    big_m = 2.0 * spectral_norm_psd(gram)
    mk, curv = [], []
    for k in range(part.n_blocks):
        sl = part.block_slice(k)
        sub = gram[sl, sl]
        if sub.shape[0] == 1:
            mk.append(2.0 * float(sub[0, 0]))
            curv.append(2.0 * float(sub[0, 0]))
        else:
            ev = np.linalg.eigvalsh(sub)
            mk.append(2.0 * float(ev[-1]))
            curv.append(2.0 * max(float(ev[0]), 0.0))

    nonsmooth = tuple(NonsmoothBlock(kind="l1", weight=lam) for _ in range(part.n_blocks))
    smooth = SmoothPart(value=value, grad=grad, lipschitz=big_m,
                        block_lipschitz=tuple(mk), block_grad_fn=block_grad)

    solver = None
    scalar = all(s == 1 for s in part.sizes)
    col_sq = np.sum(A * A, axis=0)
    if scalar and np.all(col_sq > 0.0):
        def solver(k, x, shift=None):
            j = part.offsets[k]
            col = A[:, j]
            rho = A @ x - b - col * x[j]
            beta = 2.0 * col_sq[j]
            v = -(col @ rho) / col_sq[j]
            if shift is not None:
                gam, cc = shift
                v = (beta * v + gam * float(cc[0])) / (beta + gam)
                beta = beta + gam
            return prox_block(nonsmooth[k], cons[k], beta, np.array([v]))

    composite = _quadratic_composite(
        [A[:, part.block_slice(k)] for k in range(part.n_blocks)]
    )
    return Problem(
        partition=part, smooth=smooth, nonsmooth=nonsmooth, constraints=cons,
        name="lasso", block_curvature=tuple(curv), exact_solver=solver,
        composite=composite, meta={"m": m, "n": n, "lam": lam},
    )


def _quadratic_composite(blocks: list[Array]) -> Optional[CompositeStructure]:
    k = len(blocks)
    if k < 2:
        return None
    dim = sum(bk.shape[1] for bk in blocks)
    gram_norms = np.array([[spectral_norm_psd(bk.T @ bk) for bk in blocks]])
    cross = np.full((1, k), 2.0 * np.sqrt(k - 1.0))
    return CompositeStructure(
        block_maps=(tuple(blocks),),
        linear=np.zeros(dim),
        moduli=np.full((1, k), 2.0),
        cross_lipschitz=cross,
        map_gram_norms=gram_norms,
    )


# ---------------------------------------------------------------------------
# grouped least squares + per-block l2-norm penalties


def build_group_lasso(block_mats: Sequence[Array], b, weights, constraints=None) -> Problem:
    mats = [np.asarray(Ak, dtype=float) for Ak in block_mats]
    b = np.asarray(b, dtype=float)
    m = b.shape[0]
    if any(Ak.ndim != 2 or Ak.shape[0] != m for Ak in mats):
        raise ValueError("every block matrix needs m rows matching b")
    weights = np.broadcast_to(np.asarray(weights, dtype=float), (len(mats),))
    if np.any(weights < 0):
        raise ValueError("penalty weights must be nonnegative")
    part = make_partition([Ak.shape[1] for Ak in mats])
    cons = _default_constraints(part, constraints)
    A = np.hstack(mats)
    gram = A.T @ A

    def value(x):
        r = A @ x - b
        return float(r @ r)

    def grad(x):
        return 2.0 * (A.T @ (A @ x - b))

    def block_grad(k, x):
        sl = part.block_slice(k)
        return 2.0 * (A[:, sl].T @ (A @ x - b))

    big_m = 2.0 * spectral_norm_psd(gram)
    mk, curv, eigs = [], [], []
    for k, Ak in enumerate(mats):
        evals, vecs = np.linalg.eigh(Ak.T @ Ak)
        evals = np.maximum(evals, 0.0)
        eigs.append((evals, vecs))
        mk.append(2.0 * float(evals[-1]))
        curv.append(2.0 * float(evals[0]))

    nonsmooth = tuple(
        NonsmoothBlock(kind="group-l2", weight=float(w)) for w in weights
    )
    smooth = SmoothPart(value=value, grad=grad, lipschitz=big_m,
                        block_lipschitz=tuple(mk), block_grad_fn=block_grad)

    def solver(k, x, shift=None):
        if cons[k].kind != "all-space":
            raise UnsupportedCombination("exact group solve needs an unconstrained block")
        sl = part.block_slice(k)
        rho = b - A @ x + mats[k] @ x[sl]
        evals, vecs = eigs[k]
        sh = None if shift is None else (shift[0], np.asarray(shift[1], dtype=float))
        return group_l2_block_min(evals, vecs, mats[k].T @ rho, float(weights[k]), shift=sh)

    return Problem(
        partition=part, smooth=smooth, nonsmooth=nonsmooth, constraints=cons,
        name="group-lasso", block_curvature=tuple(curv), exact_solver=solver,
        composite=_quadratic_composite(mats),
        meta={"m": m, "weights": [float(w) for w in weights]},
    )


# ---------------------------------------------------------------------------
# sparse logistic regression (prox-linear only)


def build_logistic(A, y, weight: float, block_sizes=None, constraints=None) -> Problem:
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise ValueError("need data rows (I, n) and one label per row")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    rows, n = A.shape
    part = make_partition(block_sizes if block_sizes is not None else [1] * n)
    if part.dim != n:
        raise ValueError("block sizes must partition the features")
    cons = _default_constraints(part, constraints)
    Ay = A * y[:, None]
    gram = A.T @ A

    def value(x):
        return float(np.sum(np.logaddexp(0.0, -(Ay @ x))))

    def grad(x):
        return -(Ay.T @ expit(-(Ay @ x)))

    def block_grad(k, x):
        sl = part.block_slice(k)
        return -(Ay[:, sl].T @ expit(-(Ay @ x)))

    # sigmoid curvature bound: the Hessian is dominated by (1/2) A^T A
    big_m = 0.5 * spectral_norm_psd(gram)
    mk = []
    for k in range(part.n_blocks):
        sl = part.block_slice(k)
        sub = gram[sl, sl]
        top = float(sub[0, 0]) if sub.shape[0] == 1 else float(np.linalg.eigvalsh(sub)[-1])
        mk.append(0.5 * top)

    nonsmooth = tuple(
        NonsmoothBlock(kind="l1", weight=float(weight)) for _ in range(part.n_blocks)
    )
    smooth = SmoothPart(value=value, grad=grad, lipschitz=big_m,
                        block_lipschitz=tuple(mk), block_grad_fn=block_grad)
    return Problem(
        partition=part, smooth=smooth, nonsmooth=nonsmooth, constraints=cons,
        name="logistic", block_curvature=(0.0,) * part.n_blocks,
        meta={"rows": rows, "n": n, "weight": float(weight)},
    )


# ---------------------------------------------------------------------------
# squared-hinge SVM loss (scalar blocks carry an exact breakpoint-scan solve)


def build_l2svm(rows, block_sizes=None, l1_weight: float = 0.0, constraints=None) -> Problem:
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise ValueError("need data rows of shape (I, n)")
    n_rows, n = rows.shape
    part = make_partition(block_sizes if block_sizes is not None else [1] * n)
    if part.dim != n:
        raise ValueError("block sizes must partition the features")
    cons = _default_constraints(part, constraints)
    gram = rows.T @ rows

    def value(x):
        q = np.maximum(0.0, 1.0 - rows @ x)
        return float(q @ q)

    def grad(x):
        q = np.maximum(0.0, 1.0 - rows @ x)
        return -2.0 * (rows.T @ q)

    def block_grad(k, x):
        sl = part.block_slice(k)
        q = np.maximum(0.0, 1.0 - rows @ x)
        return -2.0 * (rows[:, sl].T @ q)

    big_m = 2.0 * spectral_norm_psd(gram)
    mk = []
    for k in range(part.n_blocks):
        sl = part.block_slice(k)
        sub = gram[sl, sl]
        top = float(sub[0, 0]) if sub.shape[0] == 1 else float(np.linalg.eigvalsh(sub)[-1])
        mk.append(2.0 * top)

    kind = "l1" if l1_weight > 0.0 else "zero"
    nonsmooth = tuple(
        NonsmoothBlock(kind=kind, weight=float(l1_weight)) for _ in range(part.n_blocks)
    )
    smooth = SmoothPart(value=value, grad=grad, lipschitz=big_m,
                        block_lipschitz=tuple(mk), block_grad_fn=block_grad)

    solver = None
    if all(s == 1 for s in part.sizes):
        def solver(k, x, shift=None):
            j = part.offsets[k]
            dcol = rows[:, j]
            cvec = 1.0 - rows @ x + dcol * x[j]
            lo, hi = _constraint_interval(cons[k])
            sh = None if shift is None else (shift[0], float(np.asarray(shift[1])[0]))
            t = piecewise_quadratic_min(cvec, dcol, lam=float(l1_weight),
                                        lo=lo, hi=hi, shift=sh)
            return np.array([t])

    return Problem(
        partition=part, smooth=smooth, nonsmooth=nonsmooth, constraints=cons,
        name="l2svm", block_curvature=(0.0,) * part.n_blocks, exact_solver=solver,
        svm=SvmData(rows=rows, partition=part),
        meta={"rows": n_rows, "n": n, "l1_weight": float(l1_weight)},
    )


# ---------------------------------------------------------------------------
# smoothed sum of norms, solved by reweighted least squares


class ReweightingBound:
    """Model-specific upper bound for the smoothed sum-of-norms objective.

    Freezing each term's denominator at the anchor gives a convex quadratic
    that dominates the objective (arithmetic-geometric mean inequality) and
    touches it at the anchor; minimizing it is one reweighting step.
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        data = problem.irls
        self.data = data
        self.kinds = ("model-custom",)
        self.lip = (data.grad_lipschitz,)
        self.gamma_blocks = (None,)
        self.anchor_lip = (None,)
        self._grams = tuple(A.T @ A for A in data.mats)
        self._cross = tuple(A.T @ b for A, b in zip(data.mats, data.offsets))
        self._bsq = tuple(float(b @ b) for b in data.offsets)

    @property
    def kind(self) -> str:
        return "model-custom"

    @property
    def gamma(self) -> float:
        return 0.0

    @property
    def l_max(self) -> float:
        return self.lip[0]

    @property
    def g_max(self):
        return None

    def value(self, k: int, v, anchor, grad_k=None) -> float:
        v = np.asarray(v, dtype=float)
        w = self.data.weights(np.asarray(anchor, dtype=float))
        total = 0.0
        for j, (A, b) in enumerate(zip(self.data.mats, self.data.offsets)):
            r = A @ v + b
            total += 0.5 * ((r @ r + self.data.eta**2) / w[j] + w[j])
        return float(total)

    def argmin(self, k: int, anchor, grad_k=None) -> Array:
        return self._solve(np.asarray(anchor, dtype=float), 0.0)

    def argmin_regularized(self, k: int, anchor, gamma: float) -> Array:
        return self._solve(np.asarray(anchor, dtype=float), float(gamma))

    def _solve(self, anchor: Array, gamma: float) -> Array:
        p = self.problem
        w = self.data.weights(anchor)
        dim = p.dim
        H = np.zeros((dim, dim))
        rhs = np.zeros(dim)
        for j in range(len(self._grams)):
            H += self._grams[j] / w[j]
            rhs -= self._cross[j] / w[j]
        if gamma > 0.0:
            H = H + gamma * np.eye(dim)
            rhs = rhs + gamma * anchor
        h = p.nonsmooth[0]
        cs = p.constraints[0]
        if (h.kind in ("zero", "indicator") or h.weight == 0.0) and cs.kind == "all-space":
            try:
                return np.linalg.solve(H, rhs)
            except np.linalg.LinAlgError:
                return np.linalg.lstsq(H, rhs, rcond=None)[0]
        # strongly convex quadratic plus a simple regularizer: inner prox loop
        beta = 2.0 * spectral_norm_psd(H)
        x = cs.project(anchor)
        for _ in range(20000):
            g = 2.0 * (H @ x) - 2.0 * rhs
            x_new = prox_block(h, cs, beta, x - g / beta)
            if np.linalg.norm(x_new - x) <= 1e-13 * (1.0 + np.linalg.norm(x_new)):
                return x_new
            x = x_new
        return x


def build_irls(mats: Sequence[Array], offsets: Sequence[Array], eta: float,
               l1_weight: float = 0.0, constraint: Optional[ConstraintSet] = None) -> Problem:
    if eta <= 0:
        raise ValueError("smoothing parameter must be positive")
    mats = tuple(np.asarray(A, dtype=float) for A in mats)
    offsets = tuple(np.asarray(b, dtype=float) for b in offsets)
    dim = mats[0].shape[1]
    if any(A.shape[1] != dim for A in mats) or any(
        b.shape != (A.shape[0],) for A, b in zip(mats, offsets)
    ):
        raise ValueError("inconsistent term shapes")
    part = make_partition([dim])
    cons = (constraint if constraint is not None else all_space(dim),)
    S = np.zeros((dim, dim))
    for A in mats:
        S += A.T @ A
    lip = spectral_norm_psd(S) / eta
    data = IrlsData(mats=mats, offsets=offsets, eta=float(eta), grad_lipschitz=lip)

    def value(x):
        total = 0.0
        for A, b in zip(mats, offsets):
            r = A @ x + b
            total += np.sqrt(r @ r + eta**2)
        return float(total)

    def grad(x):
        g = np.zeros(dim)
        for A, b in zip(mats, offsets):
            r = A @ x + b
            g += (A.T @ r) / np.sqrt(r @ r + eta**2)
        return g

    kind = "l1" if l1_weight > 0.0 else "zero"
    smooth = SmoothPart(value=value, grad=grad, lipschitz=lip, block_lipschitz=(lip,))
    return Problem(
        partition=part, smooth=smooth,
        nonsmooth=(NonsmoothBlock(kind=kind, weight=float(l1_weight)),),
        constraints=cons, name="irls",
        custom_surrogate_factory=ReweightingBound, irls=data,
        meta={"terms": len(mats), "dim": dim, "eta": float(eta)},
    )


def irls_step(mats: Sequence[Array], offsets: Sequence[Array], eta: float, x: Array) -> Array:
    """One classical reweighting iterate for the smoothed sum of norms (h = 0).

    Kept independent of the surrogate machinery so runs can be checked
    against the textbook update.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    H = np.zeros((dim, dim))
    rhs = np.zeros(dim)
    for A, b in zip(mats, offsets):
        r = A @ x + b
        w = np.sqrt(r @ r + eta**2)
        H += (A.T @ A) / w
        rhs -= (A.T @ b) / w
    return np.linalg.solve(H, rhs)


# ---------------------------------------------------------------------------
# synthetic PSD quadratics


def build_quadratic(Q, c, block_sizes=None, constraints=None) -> Problem:
    Q = np.asarray(Q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n) or c.shape != (n,):
        raise ValueError("need square Q and matching linear term")
    scale = max(1.0, float(np.max(np.abs(Q))))
    if np.max(np.abs(Q - Q.T)) > 1e-10 * scale:
        raise ValueError("Q must be symmetric")
    part = make_partition(block_sizes if block_sizes is not None else [n])
    cons = _default_constraints(part, constraints)

    def value(x):
        return float(x @ (Q @ x) + c @ x)

    def grad(x):
        return 2.0 * (Q @ x) + c

    eigs = []
    mk, curv = [], []
    for k in range(part.n_blocks):
        sl = part.block_slice(k)
        evals, vecs = np.linalg.eigh(Q[sl, sl])
        evals = np.maximum(evals, 0.0)
        eigs.append((evals, vecs))
        mk.append(2.0 * float(evals[-1]))
        curv.append(2.0 * float(evals[0]))
    big_m = 2.0 * spectral_norm_psd(Q)

    smooth = SmoothPart(value=value, grad=grad, lipschitz=big_m, block_lipschitz=tuple(mk))
    nonsmooth = tuple(NonsmoothBlock(kind="zero") for _ in range(part.n_blocks))

    def solver(k, x, shift=None):
        sl = part.block_slice(k)
        rest = 2.0 * (Q[sl, :] @ x) - 2.0 * (Q[sl, sl] @ x[sl]) + c[sl]
        gamma, gc = (0.0, None) if shift is None else (shift[0], np.asarray(shift[1], float))
        if part.sizes[k] == 1:
            a2 = 2.0 * float(Q[sl, sl][0, 0]) + gamma
            b1 = float(rest[0]) - (gamma * float(gc[0]) if gc is not None else 0.0)
            lo, hi = _constraint_interval(cons[k])
            if a2 > 0.0:
                t = min(max(-b1 / a2, lo), hi)
            elif b1 > 0.0:
                t = lo
            elif b1 < 0.0:
                t = hi
            else:
                t = min(max(0.0, lo), hi)
            if not np.isfinite(t):
                raise UnsupportedCombination("unbounded scalar quadratic subproblem")
            return np.array([t])
        if cons[k].kind != "all-space":
            raise UnsupportedCombination("exact quadratic solve needs an unconstrained block")
        evals, vecs = eigs[k]
        dvals = 2.0 * evals + gamma
        rhs = -rest + (gamma * gc if gc is not None else 0.0)
        z = vecs.T @ rhs
        cut = 1e-12 * max(float(np.max(dvals)), 1.0)
        coef = np.where(dvals > cut, z / np.where(dvals > cut, dvals, 1.0), 0.0)
        return vecs @ coef  # minimum-norm solution of the block optimality system

    def reference():
        x_star, *_ = np.linalg.lstsq(2.0 * Q, -c, rcond=None)
        resid = float(np.linalg.norm(2.0 * (Q @ x_star) + c))
        if resid > 1e-7 * max(1.0, float(np.linalg.norm(c))):
            raise ValueError("quadratic has no attained minimum (linear term escapes)")
        return x_star, value(x_star)

    def inner_unique(k):
        evals, _ = eigs[k]
        return bool(evals[0] > 1e-10 * max(1.0, evals[-1]))

    unconstrained = all(cs.kind == "all-space" for cs in cons)
    return Problem(
        partition=part, smooth=smooth, nonsmooth=nonsmooth, constraints=cons,
        name="quadratic", block_curvature=tuple(curv), exact_solver=solver,
        reference_solver=reference if unconstrained else None,
        inner_unique=inner_unique, meta={"n": n},
    )


# ---------------------------------------------------------------------------
# seeded instance generators


def gen_lasso(m: int, n: int, lam: float, seed: int, density: float = 1.0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    if density < 1.0:
        mask = rng.random((m, n)) < density
        for j in range(n):
            if not mask[:, j].any():
                mask[rng.integers(m), j] = True  # keep every column nonzero
        A = A * mask
    b = rng.standard_normal(m) * 2.0
    return A, b, float(lam)


def gen_group_lasso(m: int, sizes: Sequence[int], weight: float, seed: int,
                    deficient: Sequence[int] = ()):
    rng = np.random.default_rng(seed)
    mats = []
    for k, s in enumerate(sizes):
        Ak = rng.standard_normal((m, s))
        if k in set(deficient) and s >= 2:
            half = max(1, s // 2)
            Ak[:, half:] = Ak[:, : s - half]  # duplicated columns: rank-deficient block
        mats.append(Ak)
    b = rng.standard_normal(m) * 2.0
    return mats, b, [float(weight)] * len(sizes)


def gen_logistic(n_rows: int, dim: int, weight: float, seed: int):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n_rows, dim))
    planted = rng.standard_normal(dim)
    y = np.where(A @ planted + 0.5 * rng.standard_normal(n_rows) > 0.0, 1.0, -1.0)
    return A, y, float(weight)


def gen_l2svm(n_rows: int, dim: int, seed: int):
    # rows >> dim keeps the data non-separable, so level sets stay compact
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n_rows, dim))
    signs = rng.choice([-1.0, 1.0], size=n_rows)
    return rows * signs[:, None]


def gen_quadratic(sizes: Sequence[int], seed: int, rank_deficit: int = 0):
    rng = np.random.default_rng(seed)
    n = int(np.sum(sizes))
    rank = max(1, n - int(rank_deficit))
    G = rng.standard_normal((rank, n))
    Q = G.T @ G / np.sqrt(n)
    target = rng.standard_normal(n)
    c = -2.0 * (Q @ target)
    return Q, c


def gen_two_block_quadratic(n_inner: int, n_outer: int, seed: int,
                            zero_eigs: int = 1, min_pos: float = 1e-4):
    """Two-block PSD quadratic: inner block identity (unique inner solves),
    outer block singular with a controlled smallest positive reduced eigenvalue.

    Returns (Q, c, sizes) with the inner block first.
    """
    if not 1 <= zero_eigs < n_outer:
        raise ValueError("need 1 <= zero_eigs < n_outer")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((n_outer, n_outer)))
    spectrum = np.concatenate((
        np.zeros(zero_eigs),
        np.geomspace(min_pos, 1.0, n_outer - zero_eigs),
    ))
    reduced = (basis * spectrum) @ basis.T
    null_dir = basis[:, 0]
    coupling = 0.3 * rng.standard_normal((n_inner, n_outer))
    coupling -= np.outer(coupling @ null_dir, null_dir)  # keep the outer block singular
    upper_left = np.eye(n_inner)
    lower_right = reduced + coupling.T @ coupling
    Q = np.block([[upper_left, coupling], [coupling.T, lower_right]])
    Q = 0.5 * (Q + Q.T)
    target = rng.standard_normal(n_inner + n_outer)
    c = -2.0 * (Q @ target)
    return Q, c, (n_inner, n_outer)


def gen_fermat_weber(n_terms: int, dim: int, seed: int):
    """Distance-sum instance: identity maps to randomly placed anchor points."""
    rng = np.random.default_rng(seed)
    points = rng.standard_normal((n_terms, dim)) * 3.0
    mats = [np.eye(dim) for _ in range(n_terms)]
    offsets = [-points[j] for j in range(n_terms)]
    return mats, offsets


# ---------------------------------------------------------------------------
# plain-text matrix format: header line "rows cols", row-major values


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(format(v, ".17g") for v in row) + "\n")


def read_matrix(path) -> Array:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected header 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        data = np.array(fh.read().split(), dtype=float)
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape(rows, cols)
