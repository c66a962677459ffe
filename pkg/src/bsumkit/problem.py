"""Block-partitioned composite convex problems and their oracles.

A problem is  f(x) = g(x) + sum_k h_k(x_k)  subject to x_k in X_k, where g is
smooth convex with declared Lipschitz constants and each h_k is a simple
convex regularizer.  Everything here is an immutable value object; oracles
are pure functions, so instances can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


class UnsupportedCombination(ValueError):
    """An operation the model / regularizer / constraint pairing cannot do exactly."""


# ---------------------------------------------------------------------------
# partition and points


@dataclass(frozen=True)
class BlockPartition:
    """Partition of R^n into K contiguous blocks of the given sizes."""

    sizes: tuple[int, ...]
    offsets: tuple[int, ...]

    @property
    def n_blocks(self) -> int:
        return len(self.sizes)

    @property
    def dim(self) -> int:
        return self.offsets[-1] + self.sizes[-1]

    def block_slice(self, k: int) -> slice:
        if not 0 <= k < len(self.sizes):
            raise IndexError(f"block index {k} out of range for {len(self.sizes)} blocks")
        return slice(self.offsets[k], self.offsets[k] + self.sizes[k])

    def block(self, x: Array, k: int) -> Array:
        return x[self.block_slice(k)]


def make_partition(sizes) -> BlockPartition:
    sizes = tuple(int(s) for s in sizes)
    if not sizes:
        raise ValueError("partition needs at least one block")
    if any(s < 1 for s in sizes):
        raise ValueError(f"all block sizes must be >= 1, got {sizes}")
    offsets = tuple(int(o) for o in np.concatenate(([0], np.cumsum(sizes)[:-1])))
    return BlockPartition(sizes=sizes, offsets=offsets)


@dataclass(frozen=True, eq=False)
class Point:
    """A vector tied to a partition, with contiguous block views."""

    partition: BlockPartition
    values: Array

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.shape[0] != self.partition.dim:
            raise ValueError(
                f"point has length {v.shape}, partition expects {self.partition.dim}"
            )
        object.__setattr__(self, "values", v)

    def block(self, k: int) -> Array:
        return self.partition.block(self.values, k)


def as_vector(x, dim: int) -> Array:
    """Accept a Point or array-like and return a float vector of length dim."""
    v = x.values if isinstance(x, Point) else np.asarray(x, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"expected vector of length {dim}, got shape {v.shape}")
    return v


# ---------------------------------------------------------------------------
# constraint sets


@dataclass(frozen=True, eq=False)
class ConstraintSet:
    """A simple closed convex set with a closed-form projection."""

    kind: str  # "all-space" | "box" | "ball" | "nonneg"
    dim: int
    lo: Optional[Array] = None
    hi: Optional[Array] = None
    center: Optional[Array] = None
    radius: float = 0.0

    def project(self, v: Array) -> Array:
        v = np.asarray(v, dtype=float)
        if self.kind == "all-space":
            return v.copy()
        if self.kind == "box":
            return np.clip(v, self.lo, self.hi)
        if self.kind == "nonneg":
            return np.maximum(v, 0.0)
        if self.kind == "ball":
            d = v - self.center
            nd = float(np.linalg.norm(d))
            if nd <= self.radius:
                return v.copy()
            return self.center + d * (self.radius / nd)
        raise ValueError(f"unknown constraint kind {self.kind!r}")

    def contains(self, v: Array, tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.project(v) - v) <= tol * (1.0 + np.linalg.norm(v)))

    def is_bounded(self) -> bool:
        if self.kind == "box":
            return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))
        return self.kind == "ball"

    def max_distance_from(self, c: Array) -> float:
        """sup over the set of the distance to c; inf when unbounded."""
        if self.kind == "box" and self.is_bounded():
            far = np.maximum(np.abs(self.lo - c), np.abs(self.hi - c))
            return float(np.linalg.norm(far))
        if self.kind == "ball":
            return self.radius + float(np.linalg.norm(self.center - c))
        return float("inf")


def all_space(dim: int) -> ConstraintSet:
    return ConstraintSet(kind="all-space", dim=dim)


def box(lo, hi) -> ConstraintSet:
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or np.any(lo > hi):
        raise ValueError("box needs lo <= hi of matching shapes")
    return ConstraintSet(kind="box", dim=lo.shape[0], lo=lo, hi=hi)


def ball(center, radius: float) -> ConstraintSet:
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    return ConstraintSet(kind="ball", dim=center.shape[0], center=center, radius=float(radius))


def nonneg(dim: int) -> ConstraintSet:
    return ConstraintSet(kind="nonneg", dim=dim)


# ---------------------------------------------------------------------------
# objective pieces


@dataclass(frozen=True, eq=False)
class NonsmoothBlock:
    """One block's regularizer: zero, weighted l1, or a weighted l2 norm.

    The "indicator" kind marks a block whose only nonsmooth structure is the
    membership indicator already absorbed into its constraint set; it
    evaluates to zero and its prox is the plain projection.
    """

    kind: str = "zero"  # "zero" | "l1" | "group-l2" | "indicator"
    weight: float = 0.0

    def value(self, v: Array) -> float:
        if self.kind in ("zero", "indicator") or self.weight == 0.0:
            return 0.0
        if self.kind == "l1":
            return self.weight * float(np.sum(np.abs(v)))
        if self.kind == "group-l2":
            return self.weight * float(np.linalg.norm(v))
        raise ValueError(f"unknown nonsmooth kind {self.kind!r}")

    def lipschitz_bound(self, dim: int) -> float:
        """A valid Lipschitz constant of this block's term w.r.t. the l2 norm."""
        if self.kind in ("zero", "indicator") or self.weight == 0.0:
            return 0.0
        if self.kind == "l1":
            return self.weight * float(np.sqrt(dim))
        if self.kind == "group-l2":
            return self.weight
        raise ValueError(f"unknown nonsmooth kind {self.kind!r}")


@dataclass(frozen=True, eq=False)
class SmoothPart:
    """Smooth convex part g with value/gradient oracles and declared constants."""

    value: Callable[[Array], float]
    grad: Callable[[Array], Array]
    lipschitz: float  # full-gradient Lipschitz constant
    block_lipschitz: tuple[float, ...]  # per-block gradient Lipschitz constants
    block_grad_fn: Optional[Callable[[int, Array], Array]] = None

    @property
    def max_block_lipschitz(self) -> float:
        return max(self.block_lipschitz)


@dataclass(eq=False)
class Problem:
    """Composite problem with per-block regularizers and constraint sets."""

    partition: BlockPartition
    smooth: SmoothPart
    nonsmooth: tuple[NonsmoothBlock, ...]
    constraints: tuple[ConstraintSet, ...]
    name: str = "problem"
    # strong-convexity modulus of g restricted to each block (0 when absent);
    # this is the curvature an exact per-block solve gets to exploit
    block_curvature: Optional[tuple[float, ...]] = None
    # exact per-block minimizer of g(., x_{-k}) + h_k over X_k; optional
    # shift=(gamma, center) adds (gamma/2)||x_k - center||^2 to the subproblem
    exact_solver: Optional[Callable[..., Array]] = None
    custom_surrogate_factory: Optional[Callable[["Problem"], object]] = None
    composite: Optional["CompositeStructure"] = None
    svm: Optional["SvmData"] = None
    irls: Optional["IrlsData"] = None
    reference_solver: Optional[Callable[[], tuple[Array, float]]] = None
    inner_unique: Optional[Callable[[int], bool]] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.partition.n_blocks
        if len(self.nonsmooth) != k or len(self.constraints) != k:
            raise ValueError("nonsmooth terms and constraint sets must match the block count")
        for j, (c, s) in enumerate(zip(self.constraints, self.partition.sizes)):
            if c.dim != s:
                raise ValueError(f"constraint set of block {j} has dim {c.dim}, block size {s}")

    @property
    def n_blocks(self) -> int:
        return self.partition.n_blocks

    @property
    def dim(self) -> int:
        return self.partition.dim


# structured data some models carry, consumed by the diagnostics


@dataclass(frozen=True, eq=False)
class CompositeStructure:
    """g as a composite of block-strongly-convex losses and linear maps."""

    block_maps: tuple[tuple[Array, ...], ...]  # [term][block] -> matrix
    linear: Array  # linear term coefficients over the full variable
    moduli: Array  # (terms, blocks) strong-convexity moduli of the loss per map output
    cross_lipschitz: Array  # (terms, blocks) gradient Lipschitz constants across blocks
    map_gram_norms: Array  # (terms, blocks) spectral norm of A A^T per map

    @property
    def n_terms(self) -> int:
        return len(self.block_maps)


@dataclass(frozen=True, eq=False)
class SvmData:
    """Rows of a squared-hinge loss, with per-block column slices."""

    rows: Array  # (n_rows, dim), labels folded into the rows
    partition: BlockPartition

    def margins_residual(self, x: Array) -> Array:
        """q_i(x) = max(0, 1 - <a_i, x>) for every row."""
        return np.maximum(0.0, 1.0 - self.rows @ x)

    def block_row_norm_max(self, k: int) -> float:
        sl = self.partition.block_slice(k)
        return float(np.max(np.linalg.norm(self.rows[:, sl], axis=1)))


@dataclass(frozen=True, eq=False)
class IrlsData:
    """Terms sqrt(||A_j x + b_j||^2 + eta^2) of a smoothed sum of norms."""

    mats: tuple[Array, ...]
    offsets: tuple[Array, ...]
    eta: float
    grad_lipschitz: float  # spectral norm of sum A_j^T A_j divided by eta

    def weights(self, x: Array) -> Array:
        return np.array(
            [np.sqrt(np.dot(A @ x + b, A @ x + b) + self.eta**2)
             for A, b in zip(self.mats, self.offsets)]
        )


# ---------------------------------------------------------------------------
# oracles


def eval_objective(problem: Problem, x) -> float:
    """f(x) = g(x) + sum_k h_k(x_k); +inf outside the domain of f."""
    v = as_vector(x, problem.dim)
    total = float(problem.smooth.value(v))
    if not np.isfinite(total):
        return float("inf")
    for k, h in enumerate(problem.nonsmooth):
        total += h.value(problem.partition.block(v, k))
    return total


def block_gradient(problem: Problem, k: int, x) -> Array:
    """Partial gradient of g with respect to block k."""
    v = as_vector(x, problem.dim)
    sl = problem.partition.block_slice(k)  # validates k
    if problem.smooth.block_grad_fn is not None:
        return problem.smooth.block_grad_fn(k, v)
    return problem.smooth.grad(v)[sl]


def full_gradient(problem: Problem, x) -> Array:
    return problem.smooth.grad(as_vector(x, problem.dim))


def project(constraint: ConstraintSet, v) -> Array:
    return constraint.project(np.asarray(v, dtype=float))


def objective_with_block(problem: Problem, x: Array, k: int, v_k: Array) -> float:
    """f at x with block k replaced by v_k."""
    y = np.array(x, dtype=float)
    y[problem.partition.block_slice(k)] = v_k
    return eval_objective(problem, y)


def feasible_start(problem: Problem) -> Array:
    """Deterministic feasible initial point: the projection of the origin."""
    x = np.zeros(problem.dim)
    for k, c in enumerate(problem.constraints):
        sl = problem.partition.block_slice(k)
        x[sl] = c.project(x[sl])
    return x


def project_feasible(problem: Problem, v: Array) -> Array:
    x = np.array(v, dtype=float)
    for k, c in enumerate(problem.constraints):
        sl = problem.partition.block_slice(k)
        x[sl] = c.project(x[sl])
    return x


def nonsmooth_value(problem: Problem, x: Array) -> float:
    return sum(
        h.value(problem.partition.block(x, k)) for k, h in enumerate(problem.nonsmooth)
    )


def nonsmooth_lipschitz(problem: Problem) -> float:
    """Lipschitz constant of h(x) = sum_k h_k(x_k) w.r.t. the l2 norm."""
    per_block = [
        h.lipschitz_bound(s) for h, s in zip(problem.nonsmooth, problem.partition.sizes)
    ]
    return float(np.sqrt(np.sum(np.square(per_block))))
