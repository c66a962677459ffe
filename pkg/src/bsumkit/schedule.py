"""Coordinate-selection rules and the all-blocks virtual update.

A schedule owns the per-run selection state (cycle position, permutation
RNG).  One schedule instance belongs to one run; build a fresh one per run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problem import Array, Problem, full_gradient, objective_with_block

RULES = (
    "gauss-seidel",
    "essentially-cyclic",
    "gauss-southwell",
    "mbi",
    "random-permutation",
)


class MissingVirtualUpdate(ValueError):
    """A greedy rule was asked to select without the virtual update it needs."""


@dataclass(eq=False)
class VirtualUpdate:
    """All-blocks candidate updates anchored at the same point.

    x_hat stacks the per-block minimizers of u_k(.; anchor) + h_k computed
    jointly (all anchored at the anchor), step_norms holds
    ||x_hat_k - anchor_k|| and objectives holds f(x_hat_k, anchor_{-k}).
    """

    anchor: Array
    x_hat: Array
    step_norms: Array
    objectives: Array


def virtual_updates(problem: Problem, surrogate, x) -> VirtualUpdate:
    x = np.asarray(x, dtype=float)
    grad = full_gradient(problem, x)
    x_hat = np.array(x)
    K = problem.n_blocks
    norms = np.zeros(K)
    objs = np.zeros(K)
    for k in range(K):
        sl = problem.partition.block_slice(k)
        cand = surrogate.argmin(k, x, grad_k=grad[sl])
        x_hat[sl] = cand
        norms[k] = np.linalg.norm(cand - x[sl])
        objs[k] = objective_with_block(problem, x, k, cand)
    return VirtualUpdate(anchor=x, x_hat=x_hat, step_norms=norms, objectives=objs)


@dataclass(eq=False)
class Schedule:
    rule: str
    n_blocks: int
    period: int = 1
    period_map: Optional[tuple[tuple[int, ...], ...]] = None
    q: float = 1.0
    rng: Optional[np.random.Generator] = None

    def needs_virtual(self) -> bool:
        return self.rule in ("gauss-southwell", "mbi")

    def select(self, r: int, virtual: Optional[VirtualUpdate] = None) -> tuple[int, ...]:
        """Ordered index set for iteration r+1 (r counts completed iterations)."""
        if self.rule == "gauss-seidel":
            return tuple(range(self.n_blocks))
        if self.rule == "essentially-cyclic":
            return self.period_map[r % self.period]
        if self.rule == "random-permutation":
            return tuple(int(i) for i in self.rng.permutation(self.n_blocks))
        if virtual is None:
            raise MissingVirtualUpdate(f"rule {self.rule!r} needs the virtual update")
        if self.rule == "gauss-southwell":
            mx = float(np.max(virtual.step_norms))
            qualifying = virtual.step_norms >= self.q * mx
            return (int(np.argmax(qualifying)),)  # smallest qualifying index
        if self.rule == "mbi":
            return (int(np.argmin(virtual.objectives)),)  # largest improvement
        raise ValueError(f"unknown rule {self.rule!r}")


def round_robin_period_map(n_blocks: int, period: int) -> tuple[tuple[int, ...], ...]:
    """Split the blocks over `period` consecutive slots, covering every index."""
    if period < 1 or period > n_blocks:
        raise ValueError("period must lie in [1, n_blocks]")
    chunks = np.array_split(np.arange(n_blocks), period)
    return tuple(tuple(int(i) for i in c) for c in chunks)


def _validate_period_map(period_map, n_blocks: int) -> tuple[tuple[int, ...], ...]:
    cleaned = []
    for slot in period_map:
        idx = tuple(int(i) for i in slot)
        for i in idx:
            if not 0 <= i < n_blocks:
                raise ValueError(f"period map contains out-of-range block index {i}")
        cleaned.append(tuple(sorted(idx)))
    covered = set().union(*[set(s) for s in cleaned]) if cleaned else set()
    missing = sorted(set(range(n_blocks)) - covered)
    if missing:
        raise ValueError(
            f"period map does not cover block indices {missing}; every index "
            f"must appear at least once per period"
        )
    return tuple(cleaned)


def make_schedule(
    rule: str,
    n_blocks: int,
    period_map=None,
    q: float = 1.0,
    seed: Optional[int] = None,
) -> Schedule:
    if rule not in RULES:
        raise ValueError(f"unknown rule {rule!r}; expected one of {RULES}")
    if rule == "gauss-southwell" and not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0,1]")
    if rule == "essentially-cyclic":
        if period_map is None:
            raise ValueError("essentially-cyclic rule needs an explicit period map")
        period_map = _validate_period_map(period_map, n_blocks)
        return Schedule(
            rule=rule, n_blocks=n_blocks, period=len(period_map), period_map=period_map
        )
    rng = None
    if rule == "random-permutation":
        # own stream, independent of any instance-generation seed
        rng = np.random.default_rng([0x5EED, 0 if seed is None else int(seed)])
    return Schedule(rule=rule, n_blocks=n_blocks, q=float(q), rng=rng)
