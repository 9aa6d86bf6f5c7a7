"""Exact rational linear algebra: vectors, matrices, affine maps, constraints.

Every entry in the system is a ``fractions.Fraction``, which keeps values in
canonical reduced form (positive denominator, gcd 1) after each operation.
Nothing in this module ever touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

from .errors import DimensionMismatch

RationalLike = Fraction | int | str


def rational(value: RationalLike) -> Fraction:
    """Coerce ints, strings like ``p/q``, and Fractions to an exact Fraction."""
    return value if isinstance(value, Fraction) else Fraction(value)


class Vector:
    """Immutable dense vector of exact rationals."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Iterable[RationalLike]):
        self._entries = tuple(rational(e) for e in entries)

    @property
    def entries(self) -> tuple[Fraction, ...]:
        return self._entries

    @staticmethod
    def zero(dim: int) -> "Vector":
        return Vector([Fraction(0)] * dim)

    @staticmethod
    def unit(dim: int, index: int) -> "Vector":
        return Vector([Fraction(1) if i == index else Fraction(0) for i in range(dim)])

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __getitem__(self, i: int) -> Fraction:
        return self._entries[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Vector) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __repr__(self) -> str:
        return f"Vector({', '.join(str(e) for e in self._entries)})"

    def _check_same_dim(self, other: "Vector", op: str) -> None:
        if len(self) != len(other):
            raise DimensionMismatch(f"{op}: dimensions {len(self)} and {len(other)} differ")

    def __add__(self, other: "Vector") -> "Vector":
        self._check_same_dim(other, "add")
        return Vector(a + b for a, b in zip(self._entries, other._entries))

    def __sub__(self, other: "Vector") -> "Vector":
        self._check_same_dim(other, "sub")
        return Vector(a - b for a, b in zip(self._entries, other._entries))

    def __neg__(self) -> "Vector":
        return Vector(-a for a in self._entries)

    def scale(self, factor: RationalLike) -> "Vector":
        f = rational(factor)
        return Vector(f * a for a in self._entries)

    def dot(self, other: "Vector") -> Fraction:
        self._check_same_dim(other, "dot")
        return sum((a * b for a, b in zip(self._entries, other._entries)), Fraction(0))

    def is_zero(self) -> bool:
        return all(a == 0 for a in self._entries)

    def norm1(self) -> Fraction:
        """Exact 1-norm; an upper bound on the Euclidean norm."""
        return sum((abs(a) for a in self._entries), Fraction(0))

    def sq_norm(self) -> Fraction:
        """Exact squared Euclidean norm."""
        return sum((a * a for a in self._entries), Fraction(0))


class Matrix:
    """Immutable dense matrix of exact rationals with explicit shape."""

    __slots__ = ("_rows", "_n_cols")

    def __init__(self, rows: Iterable[Iterable[RationalLike]], n_cols: int | None = None):
        converted = tuple(tuple(rational(e) for e in row) for row in rows)
        if converted:
            width = len(converted[0])
            for r in converted:
                if len(r) != width:
                    raise DimensionMismatch("matrix rows have inconsistent widths")
            if n_cols is not None and n_cols != width:
                raise DimensionMismatch(f"declared {n_cols} columns, rows have {width}")
            self._n_cols = width
        else:
            if n_cols is None:
                raise DimensionMismatch("empty matrix needs an explicit column count")
            self._n_cols = n_cols
        self._rows = converted

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    @property
    def n_cols(self) -> int:
        return self._n_cols

    @property
    def rows(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._rows

    @staticmethod
    def identity(n: int) -> "Matrix":
        return Matrix(
            [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)],
            n_cols=n,
        )

    @staticmethod
    def zero(n_rows: int, n_cols: int) -> "Matrix":
        return Matrix([[Fraction(0)] * n_cols for _ in range(n_rows)], n_cols=n_cols)

    @staticmethod
    def from_rows(rows: Sequence[Vector]) -> "Matrix":
        return Matrix([r.entries for r in rows], n_cols=len(rows[0]) if rows else 0)

    def row(self, i: int) -> Vector:
        return Vector(self._rows[i])

    def column(self, j: int) -> Vector:
        return Vector(r[j] for r in self._rows)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Matrix)
            and self._rows == other._rows
            and self._n_cols == other._n_cols
        )

    def __hash__(self) -> int:
        return hash((self._rows, self._n_cols))

    def __repr__(self) -> str:
        return f"Matrix({self.n_rows}x{self.n_cols})"

    def matvec(self, v: Vector) -> Vector:
        if len(v) != self._n_cols:
            raise DimensionMismatch(
                f"matvec: matrix has {self._n_cols} columns, vector has {len(v)}"
            )
        return Vector(
            sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in self._rows
        )

    def matmul(self, other: "Matrix") -> "Matrix":
        if self._n_cols != other.n_rows:
            raise DimensionMismatch(
                f"matmul: {self.n_rows}x{self.n_cols} times {other.n_rows}x{other.n_cols}"
            )
        cols = [other.column(j) for j in range(other.n_cols)]
        return Matrix(
            [[Vector(row).dot(c) for c in cols] for row in self._rows],
            n_cols=other.n_cols,
        )

    def transpose(self) -> "Matrix":
        return Matrix(
            [[self._rows[i][j] for i in range(self.n_rows)] for j in range(self._n_cols)],
            n_cols=self.n_rows,
        )


@dataclass(frozen=True)
class AffineMap:
    """x -> linear @ x + offset, with exact rational entries."""

    linear: Matrix
    offset: Vector

    def __post_init__(self):
        if self.linear.n_rows != len(self.offset):
            raise DimensionMismatch(
                f"affine map: {self.linear.n_rows} rows vs offset of length {len(self.offset)}"
            )

    @property
    def input_dim(self) -> int:
        return self.linear.n_cols

    @property
    def output_dim(self) -> int:
        return self.linear.n_rows

    @staticmethod
    def identity(n: int) -> "AffineMap":
        return AffineMap(Matrix.identity(n), Vector.zero(n))

    def apply(self, x: Vector) -> Vector:
        return self.linear.matvec(x) + self.offset


def affine_compose(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """Compose so that result.apply(x) == outer.apply(inner.apply(x))."""
    if outer.input_dim != inner.output_dim:
        raise DimensionMismatch(
            f"compose: outer expects dim {outer.input_dim}, inner outputs {inner.output_dim}"
        )
    return AffineMap(
        outer.linear.matmul(inner.linear),
        outer.linear.matvec(inner.offset) + outer.offset,
    )


def _primitive(values: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a rational tuple by the unique positive factor making it a
    primitive integer tuple (direction preserved)."""
    den = 1
    for v in values:
        den = lcm(den, v.denominator)
    ints = [int(v * den) for v in values]
    g = 0
    for n in ints:
        g = gcd(g, abs(n))
    if g > 1:
        ints = [n // g for n in ints]
    return tuple(ints)


@dataclass(frozen=True)
class LinearConstraint:
    """One half-space condition ``normal . x + offset (>|>=) 0``."""

    normal: Vector
    offset: Fraction
    strict: bool = True

    def value(self, x: Vector) -> Fraction:
        return self.normal.dot(x) + self.offset

    def holds(self, x: Vector) -> bool:
        v = self.value(x)
        return v > 0 if self.strict else v >= 0

    def negated(self) -> "LinearConstraint":
        # not(g > 0) is -g >= 0; not(g >= 0) is -g > 0
        return LinearConstraint(-self.normal, -self.offset, not self.strict)

    def direction_key(self) -> tuple[int, ...]:
        """Primitive integer form of the normal alone (parallel classes)."""
        return _primitive(self.normal.entries)

    def canonical_key(self) -> tuple:
        """Primitive integer form of (normal, offset) plus strictness."""
        return (_primitive((*self.normal.entries, self.offset)), self.strict)


@dataclass(frozen=True)
class ConstraintSystem:
    """Conjunction of linear constraints over a fixed ambient dimension."""

    constraints: tuple[LinearConstraint, ...]
    ambient_dim: int

    def __post_init__(self):
        for c in self.constraints:
            if len(c.normal) != self.ambient_dim:
                raise DimensionMismatch(
                    f"constraint normal of dim {len(c.normal)} in ambient dim {self.ambient_dim}"
                )

    @staticmethod
    def of(constraints: Iterable[LinearConstraint], ambient_dim: int) -> "ConstraintSystem":
        return ConstraintSystem(tuple(constraints), ambient_dim)

    def satisfied_by(self, x: Vector) -> bool:
        return all(c.holds(x) for c in self.constraints)

    def with_constraint(self, c: LinearConstraint) -> "ConstraintSystem":
        return ConstraintSystem(self.constraints + (c,), self.ambient_dim)

    def __len__(self) -> int:
        return len(self.constraints)


def linear_rank(vectors: Sequence[Vector]) -> int:
    """Exact rank of a list of rational vectors (fraction-free elimination).

    Rows are cleared to integers, then reduced by Bareiss-style pivoting so
    all intermediate values stay integral.
    """
    if not vectors:
        return 0
    dim = len(vectors[0])
    rows = []
    for v in vectors:
        if len(v) != dim:
            raise DimensionMismatch("rank: vectors of mixed dimensions")
        den = 1
        for e in v:
            den = lcm(den, e.denominator)
        rows.append([int(e * den) for e in v])

    rank = 0
    prev_pivot = 1
    for col in range(dim):
        pivot_row = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
        pivot = rows[rank][col]
        for r in range(rank + 1, len(rows)):
            factor = rows[r][col]
            for c in range(col, dim):
                rows[r][c] = (rows[r][c] * pivot - factor * rows[rank][c]) // prev_pivot
        prev_pivot = pivot
        rank += 1
        if rank == min(len(rows), dim):
            break
    return rank


def invert_matrix(matrix: Matrix) -> Matrix | None:
    """Exact inverse of a square rational matrix; None when singular."""
    n = matrix.n_rows
    if matrix.n_cols != n:
        raise DimensionMismatch("inverse needs a square matrix")
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(matrix.rows)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot_row is None:
            return None
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        aug[col] = [v / pivot for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return Matrix([row[n:] for row in aug], n_cols=n)


def affine_inverse(map_: AffineMap) -> AffineMap | None:
    """Inverse of an affine bijection; None when the linear part is singular."""
    inv = invert_matrix(map_.linear)
    if inv is None:
        return None
    return AffineMap(inv, -inv.matvec(map_.offset))


def solve_square(matrix: Matrix, rhs: Vector) -> Vector | None:
    """Solve ``matrix @ x = rhs`` for square matrices; None when singular."""
    n = matrix.n_rows
    if matrix.n_cols != n or len(rhs) != n:
        raise DimensionMismatch("solve_square needs a square system")
    aug = [list(row) + [rhs[i]] for i, row in enumerate(matrix.rows)]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot_row is None:
            return None
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        aug[col] = [v / pivot for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return Vector(aug[i][n] for i in range(n))
