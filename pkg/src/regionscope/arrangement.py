"""Hyperplane arrangements: counting, exact region enumeration, normalization.

Regions are identified with the sign vectors of ``normal . x + offset`` over
the hyperplane list; a region is kept only when its open polyhedron has an
exact rational interior point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

from .errors import DimensionMismatch
from .feasibility import strict_feasible
from .geometry import (
    ConstraintSystem,
    LinearConstraint,
    Matrix,
    Vector,
    linear_rank,
    rational,
    solve_square,
)


@dataclass(frozen=True)
class Hyperplane:
    """The set {x : normal . x + offset = 0}; the + side is normal . x + offset > 0."""

    normal: Vector
    offset: Fraction

    def __post_init__(self):
        if self.normal.is_zero():
            raise ValueError("hyperplane normal must be nonzero")

    def value(self, x: Vector) -> Fraction:
        return self.normal.dot(x) + self.offset


@dataclass(frozen=True)
class Arrangement:
    """An ordered, finite list of hyperplanes in a common ambient space."""

    hyperplanes: tuple[Hyperplane, ...]
    ambient_dim: int

    def __post_init__(self):
        for h in self.hyperplanes:
            if len(h.normal) != self.ambient_dim:
                raise DimensionMismatch(
                    f"hyperplane of dim {len(h.normal)} in ambient dim {self.ambient_dim}"
                )

    @staticmethod
    def of(hyperplanes: Iterable[Hyperplane], ambient_dim: int) -> "Arrangement":
        return Arrangement(tuple(hyperplanes), ambient_dim)

    def __len__(self) -> int:
        return len(self.hyperplanes)


@dataclass(frozen=True)
class ArrangementRegion:
    """A full-dimensional cell: signs over the hyperplanes plus a witness."""

    signs: tuple[int, ...]
    witness: Vector
    active_set: tuple[int, ...]

    @property
    def sign_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    def consistent_with(self, arr: Arrangement) -> bool:
        """Exact re-check of the witness against the sign vector."""
        for sign, h in zip(self.signs, arr.hyperplanes):
            if sign * h.value(self.witness) <= 0:
                return False
        return tuple(i for i, s in enumerate(self.signs) if s > 0) == self.active_set


def regions_formula_general_position(m: int, n0: int) -> tuple[int, int]:
    """Exact (region count, relatively bounded count) for m hyperplanes in
    general position in dimension n0."""
    if m < 0 or n0 < 1:
        raise ValueError("need m >= 0 and n0 >= 1")
    r = sum(comb(m, s) for s in range(n0 + 1))
    b = comb(m - 1, n0) if m >= 1 else 0
    return r, b


def sweep_count_2d(m: int) -> int:
    """Region count of m generic lines in the plane via the sweep recurrence."""
    if m < 0:
        raise ValueError("need m >= 0")
    return comb(m, 2) + m + 1


def is_general_position(arr: Arrangement) -> bool:
    """Exact test: every p <= dim of the hyperplanes meet in dimension
    dim - p, and more than dim never meet."""
    m = len(arr)
    if m == 0:
        raise ValueError("general position is undefined for an empty arrangement")
    n = arr.ambient_dim
    normals = [h.normal for h in arr.hyperplanes]
    q = min(m, n)
    for subset in combinations(range(m), q):
        if linear_rank([normals[i] for i in subset]) < q:
            return False
    if m > n:
        # with all n-subsets independent, a (n+1)-subset meets iff its
        # augmented system is consistent; emptiness needs augmented rank n+1
        for subset in combinations(range(m), n + 1):
            aug = [
                Vector((*normals[i].entries, arr.hyperplanes[i].offset))
                for i in subset
            ]
            if linear_rank(aug) < n + 1:
                return False
    return True


def enumerate_arrangement_regions(
    arr: Arrangement, *, elimination_max_dim: int = 3
) -> list[ArrangementRegion]:
    """All sign vectors with a nonempty open cell, each with an exact witness.

    Depth-first over hyperplanes in order; a branch is pruned as soon as its
    partial strict system loses feasibility. Output is sorted
    lexicographically by sign string.
    """
    dim = arr.ambient_dim
    regions: list[ArrangementRegion] = []

    def extend(
        idx: int,
        signs: tuple[int, ...],
        constraints: tuple[LinearConstraint, ...],
        keys: dict,
        witness: Vector,
    ) -> None:
        if idx == len(arr.hyperplanes):
            active = tuple(i for i, s in enumerate(signs) if s > 0)
            regions.append(ArrangementRegion(signs, witness, active))
            return
        h = arr.hyperplanes[idx]
        for sign in (1, -1):
            c = LinearConstraint(
                h.normal.scale(sign), rational(sign) * h.offset, strict=True
            )
            key = c.canonical_key()
            if key in keys:
                extend(idx + 1, signs + (sign,), constraints, keys, witness)
                continue
            opposite = LinearConstraint(-c.normal, -c.offset, strict=True)
            if opposite.canonical_key() in keys:
                continue  # contradicts an earlier sign choice
            new_constraints = constraints + (c,)
            if witness is not None and c.holds(witness):
                new_witness = witness
            else:
                new_witness = strict_feasible(
                    ConstraintSystem(new_constraints, dim),
                    elimination_max_dim=elimination_max_dim,
                )
                if new_witness is None:
                    continue
            new_keys = dict(keys)
            new_keys[key] = True
            extend(idx + 1, signs + (sign,), new_constraints, new_keys, new_witness)

    start_witness = Vector.zero(dim)
    extend(0, (), (), {}, start_witness)
    regions.sort(key=lambda r: r.sign_string)
    return regions


def _independent_normal_indices(normals: Sequence[Vector]) -> list[int]:
    """Greedy maximal independent subset, in order."""
    chosen: list[int] = []
    chosen_vecs: list[Vector] = []
    rank = 0
    for i, v in enumerate(normals):
        if linear_rank(chosen_vecs + [v]) > rank:
            chosen.append(i)
            chosen_vecs.append(v)
            rank += 1
    return chosen


def essentialize(arr: Arrangement) -> Arrangement:
    """The arrangement induced in a rational basis of the span of the normals.

    Region combinatorics (sign vectors) are preserved exactly.
    """
    if len(arr) == 0:
        raise ValueError("cannot essentialize an empty arrangement")
    normals = [h.normal for h in arr.hyperplanes]
    basis_idx = _independent_normal_indices(normals)
    basis = [normals[i] for i in basis_idx]
    new_planes = [
        Hyperplane(Vector(h.normal.dot(b) for b in basis), h.offset)
        for h in arr.hyperplanes
    ]
    return Arrangement.of(new_planes, len(basis))


def _essential_vertex_points(arr: Arrangement) -> list[Vector]:
    """Representatives in span(normals) of the minimal faces: for each
    independent subset of size rank, the unique solution inside the span."""
    if len(arr) == 0:
        return []
    normals = [h.normal for h in arr.hyperplanes]
    basis_idx = _independent_normal_indices(normals)
    basis = [normals[i] for i in basis_idx]
    r = len(basis)
    n = arr.ambient_dim
    basis_t = Matrix([[b[i] for b in basis] for i in range(n)], n_cols=r)
    points: list[Vector] = []
    for subset in combinations(range(len(arr)), r):
        sub_normals = [normals[i] for i in subset]
        if linear_rank(sub_normals) < r:
            continue
        coeff = Matrix(
            [[sub_normals[i].dot(b) for b in basis] for i in range(r)], n_cols=r
        )
        rhs = Vector(-arr.hyperplanes[i].offset for i in subset)
        y = solve_square(coeff, rhs)
        if y is not None:
            points.append(basis_t.matvec(y))
    return points


def scale_into_ball(arr: Arrangement, radius: Fraction, center: Vector) -> Arrangement:
    """Shrink and shift so every region keeps a point inside the given ball.

    The map is x -> (radius / 2d) x + center with d an exact upper bound
    (max 1-norm) on the minimal-face representatives; sign-vector
    combinatorics are unchanged.
    """
    radius = rational(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if len(arr) == 0:
        return arr
    if len(center) != arr.ambient_dim:
        raise DimensionMismatch(
            f"center of dim {len(center)} for ambient dim {arr.ambient_dim}"
        )
    points = _essential_vertex_points(arr)
    d = max((p.norm1() for p in points), default=Fraction(0))
    if d == 0:
        d = Fraction(1)
    alpha = radius / (2 * d)
    new_planes = [
        Hyperplane(h.normal, alpha * h.offset - h.normal.dot(center))
        for h in arr.hyperplanes
    ]
    return Arrangement.of(new_planes, arr.ambient_dim)


def cross_polytope_constraints(
    radius: Fraction, center: Vector
) -> list[LinearConstraint]:
    """Strict constraints for the open 1-norm ball |x - center|_1 < radius,
    a rational inner approximation of the Euclidean ball."""
    dim = len(center)
    out = []
    for signs in _sign_tuples(dim):
        normal = Vector(-Fraction(s) for s in signs)
        offset = radius + sum(
            (Fraction(s) * center[j] for j, s in enumerate(signs)), Fraction(0)
        )
        out.append(LinearConstraint(normal, offset, strict=True))
    return out


def _sign_tuples(dim: int):
    if dim == 0:
        yield ()
        return
    for rest in _sign_tuples(dim - 1):
        yield (1, *rest)
        yield (-1, *rest)


def in_ball_witnesses(
    arr: Arrangement,
    radius: Fraction,
    center: Vector,
    *,
    elimination_max_dim: int = 3,
) -> list[tuple[ArrangementRegion, Vector]]:
    """For each region, an exact witness strictly inside the Euclidean ball.

    Feasibility is solved inside the inscribed cross-polytope, and the
    squared-distance inequality is then re-checked exactly. Raises when a
    region has no point in the ball (the arrangement was not normalized).
    """
    radius = rational(radius)
    sq_radius = radius * radius
    ball = cross_polytope_constraints(radius, center)
    out = []
    for region in enumerate_arrangement_regions(
        arr, elimination_max_dim=elimination_max_dim
    ):
        constraints = [
            LinearConstraint(
                h.normal.scale(s), rational(s) * h.offset, strict=True
            )
            for s, h in zip(region.signs, arr.hyperplanes)
        ]
        witness = strict_feasible(
            ConstraintSystem.of(constraints + ball, arr.ambient_dim),
            elimination_max_dim=elimination_max_dim,
        )
        if witness is None:
            raise ValueError(
                f"region {region.sign_string} has no point in the ball of "
                f"radius {radius} at {center}"
            )
        if (witness - center).sq_norm() >= sq_radius:
            raise AssertionError("cross-polytope witness left the ball")
        out.append((region, witness))
    return out


def _slope_ladder(n: int) -> list[Fraction]:
    """n increasing slopes spread on both sides of zero with ratio 5/2,
    keeping consecutive direction angles well separated."""
    values = [Fraction(0)] if n % 2 else []
    step = Fraction(2, 5)
    while len(values) < n:
        values.extend((step, -step))
        step *= Fraction(5, 2)
    return sorted(values)


def build_tangent_arrangement(n: int, n0: int) -> Arrangement:
    """n hyperplanes whose cells realize the empty active set and every
    consecutive run {a..b} of active indices.

    Uses the line family y = t^2 - t x over increasing slopes t (unit i
    active above line i): the heights t^2 - t x are convex in t at every
    abscissa, so the set of lines below any point is a consecutive index
    interval. Slopes come from a two-sided geometric ladder, which keeps
    consecutive normals at healthy angles and all crossings near the
    origin. For n0 > 2 the planar construction is extended orthogonally
    into the extra coordinates.
    """
    if n < 1 or n0 < 2:
        raise ValueError("need n >= 1 and n0 >= 2")
    planes = []
    for t in _slope_ladder(n):
        normal = Vector([t, Fraction(1)] + [Fraction(0)] * (n0 - 2))
        planes.append(Hyperplane(normal, -t * t))
    return Arrangement.of(planes, n0)
