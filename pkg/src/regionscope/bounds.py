"""Closed-form region counts, parameter counts, and their ratios.

Everything here is exact integer/rational arithmetic; asymptotic claims are
represented only by finite-size evaluations elsewhere in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence


@dataclass(frozen=True)
class ArchSpec:
    """An architecture shape: inputs, hidden widths, outputs."""

    n0: int
    hidden_widths: tuple[int, ...]
    n_out: int = 1

    def __post_init__(self):
        if self.n0 < 1 or self.n_out < 1 or not self.hidden_widths:
            raise ValueError("all architecture sizes must be positive")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError("all architecture sizes must be positive")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)


def shallow_max_regions(n0: int, m: int) -> int:
    """Largest region count of a single hidden layer of m units on n0 inputs."""
    if n0 < 1 or m < 0:
        raise ValueError("need n0 >= 1 and m >= 0")
    return sum(comb(m, j) for j in range(n0 + 1))


def deep_lower_bound(n0: int, widths: Sequence[int]) -> int:
    """Guaranteed-achievable region count of a deep stack: the product of
    per-layer replication factors times the final layer's maximum."""
    if not widths:
        raise ValueError("need at least one hidden width")
    product = 1
    for w in widths[:-1]:
        product *= w // n0
    return product * shallow_max_regions(n0, widths[-1])


def folding_lower_bound(n0: int, k: int) -> int:
    """Guaranteed-achievable count for k hidden layers of width 2*n0 built
    from absolute-value unit pairs."""
    if k < 1 or n0 < 1:
        raise ValueError("need k >= 1 and n0 >= 1")
    return 2 ** ((k - 1) * n0) * shallow_max_regions(n0, 2 * n0)


def param_count_deep(arch: ArchSpec) -> int:
    """Parameters of a deep model with equal hidden widths, in closed form."""
    widths = set(arch.hidden_widths)
    if len(widths) > 1:
        raise ValueError(
            "closed form needs equal hidden widths; use param_count_literal"
        )
    n = arch.hidden_widths[0]
    k = arch.depth
    return (k - 1) * n * n + (k + arch.n0 + arch.n_out) * n + arch.n_out


def param_count_literal(arch: ArchSpec) -> int:
    """Direct count of weight and bias entries for any width profile."""
    total = 0
    prev = arch.n0
    for w in arch.hidden_widths:
        total += w * prev + w
        prev = w
    total += arch.n_out * prev + arch.n_out
    return total


def param_count_shallow(arch: ArchSpec, *, stated: bool = True) -> int:
    """Parameters of the shallow model with k*n units matching ``arch``.

    ``stated=True`` uses the published closed form (n0 + n_out) k n + n +
    n_out, whose bias term reads n rather than k n; ``stated=False``
    recounts the entries literally. Both are exposed on purpose: the two
    disagree whenever k > 1, and the toolkit takes no side.
    """
    widths = set(arch.hidden_widths)
    if len(widths) > 1:
        raise ValueError("the shallow comparison needs equal hidden widths")
    n = arch.hidden_widths[0]
    k = arch.depth
    m = k * n
    if stated:
        return (arch.n0 + arch.n_out) * m + n + arch.n_out
    return m * arch.n0 + m + m * arch.n_out + arch.n_out


def param_count(arch: ArchSpec, shallow_stated: bool | None = None) -> int:
    """Spec-shaped dispatcher: deep closed form when ``shallow_stated`` is
    None, otherwise the shallow count for the equivalent k*n-unit model."""
    if shallow_stated is None:
        return param_count_deep(arch)
    return param_count_shallow(arch, stated=shallow_stated)


@dataclass(frozen=True)
class RatioRow:
    """One (n, k) comparison of regions per parameter."""

    n0: int
    n: int
    k: int
    deep_bound: int
    shallow_max: int
    deep_params: int
    shallow_params_stated: int
    shallow_params_literal: int
    deep_ratio: Fraction
    shallow_ratio: Fraction
    dominant: str


def regions_per_param_table(
    n0: int, n_range: Sequence[int], k_range: Sequence[int]
) -> list[RatioRow]:
    """Exact deep-vs-shallow ratio table over a grid of widths and depths.

    The shallow ratio uses the stated parameter formula; the literal count
    is carried alongside in its own column.
    """
    if not n_range or not k_range:
        raise ValueError("need nonempty ranges")
    rows = []
    for n in n_range:
        for k in k_range:
            arch = ArchSpec(n0, (n,) * k)
            deep_bound = deep_lower_bound(n0, [n] * k)
            shallow = shallow_max_regions(n0, k * n)
            deep_params = param_count_deep(arch)
            stated = param_count_shallow(arch, stated=True)
            literal = param_count_shallow(arch, stated=False)
            deep_ratio = Fraction(deep_bound, deep_params)
            shallow_ratio = Fraction(shallow, stated)
            if deep_ratio > shallow_ratio:
                dominant = "deep"
            elif deep_ratio < shallow_ratio:
                dominant = "shallow"
            else:
                dominant = "tie"
            rows.append(
                RatioRow(
                    n0, n, k, deep_bound, shallow, deep_params, stated, literal,
                    deep_ratio, shallow_ratio, dominant,
                )
            )
    return rows


def min_shallow_width(n0: int, target_regions: int) -> int:
    """Smallest hidden-layer width whose maximal region count reaches the
    target; exact inverse of shallow_max_regions by monotone search."""
    if target_regions < 1:
        raise ValueError("target must be at least 1")
    m = 0
    while shallow_max_regions(n0, m) < target_regions:
        m += 1
    return m
