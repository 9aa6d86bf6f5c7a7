"""Exact feasibility of systems of strict/weak linear inequalities.

Two backends share one entry point:

* variable-by-variable projection (Fourier-Motzkin) with rational
  back-substitution, used up to ``elimination_max_dim`` ambient dimensions;
* an exact two-phase simplex (Bland's rule) that maximizes the minimum
  slack of the strict constraints, used above that.

Both return an exact rational witness or ``None``; strictness is handled
without epsilons in either backend.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .geometry import ConstraintSystem, LinearConstraint, Vector, _primitive

# (coefficients over remaining vars, constant, strict)
_Row = tuple[tuple[Fraction, ...], Fraction, bool]

_ZERO = Fraction(0)
_INFEASIBLE = object()


def _normalize(rows: list[_Row]):
    """Drop tautologies and dominated parallel constraints.

    Keeps, per normal direction, the binding constant only. Returns the
    reduced list, or the infeasible sentinel when a constant row fails.
    """
    best: dict[tuple[int, ...], tuple[Fraction, bool]] = {}
    for coeffs, const, strict in rows:
        if all(c == 0 for c in coeffs):
            if const < 0 or (strict and const == 0):
                return _INFEASIBLE
            continue
        key = _primitive(coeffs)
        # rescale const to the primitive normal so constants are comparable
        scale = None
        for c, k in zip(coeffs, key):
            if c != 0:
                scale = Fraction(k) / c
                break
        const_scaled = const * scale
        kept = best.get(key)
        if kept is None:
            best[key] = (const_scaled, strict)
        else:
            kc, ks = kept
            # smaller constant is tighter; on ties strict dominates weak
            if const_scaled < kc or (const_scaled == kc and strict and not ks):
                best[key] = (const_scaled, strict)
    return [
        (tuple(Fraction(k) for k in key), const, strict)
        for key, (const, strict) in best.items()
    ]


def _eliminate(rows: list[_Row], var: int):
    """Project away variable ``var``, combining lower/upper bound pairs."""
    pos: list[_Row] = []
    neg: list[_Row] = []
    keep: list[_Row] = []
    for coeffs, const, strict in rows:
        c = coeffs[var]
        if c > 0:
            pos.append((coeffs, const, strict))
        elif c < 0:
            neg.append((coeffs, const, strict))
        else:
            keep.append(
                (coeffs[:var] + coeffs[var + 1 :], const, strict)
            )
    out = keep
    for p_coeffs, p_const, p_strict in pos:
        a = p_coeffs[var]
        for q_coeffs, q_const, q_strict in neg:
            b = q_coeffs[var]
            new_coeffs = tuple(
                a * q_coeffs[j] - b * p_coeffs[j]
                for j in range(len(p_coeffs))
                if j != var
            )
            out.append((new_coeffs, a * q_const - b * p_const, p_strict or q_strict))
    return _normalize(out)


def _back_substitute(levels: list[list[_Row]], dim: int) -> list[Fraction]:
    """Pick one exact point from the nested projected systems."""
    values: list[Fraction] = []
    for i in range(dim):
        rows = levels[dim - 1 - i]  # constraints over variables 0..i
        lo = hi = None
        lo_strict = hi_strict = False
        for coeffs, const, strict in rows:
            c = coeffs[i]
            if c == 0:
                continue  # holds by construction of the deeper projections
            partial = sum(
                (coeffs[j] * values[j] for j in range(i)), _ZERO
            )
            bound = -(partial + const) / c
            if c > 0:
                if lo is None or bound > lo or (bound == lo and strict):
                    lo, lo_strict = bound, strict
            else:
                if hi is None or bound < hi or (bound == hi and strict):
                    hi, hi_strict = bound, strict
        if lo is None and hi is None:
            values.append(_ZERO)
        elif hi is None:
            values.append(lo + 1)
        elif lo is None:
            values.append(hi - 1)
        elif lo < hi:
            values.append((lo + hi) / 2)
        else:
            # equal bounds can only arise from a weak-weak binding pair
            assert lo == hi and not (lo_strict or hi_strict)
            values.append(lo)
    return values


def _feasible_elimination(rows: list[_Row], dim: int) -> Vector | None:
    active = _normalize(rows)
    if active is _INFEASIBLE:
        return None
    levels: list[list[_Row]] = []
    for var in range(dim - 1, -1, -1):
        levels.append(active)
        active = _eliminate(active, var)
        if active is _INFEASIBLE:
            return None
    # what remains are variable-free rows already validated by _normalize
    return Vector(_back_substitute(levels, dim))


# ---------------------------------------------------------------------------
# exact simplex fallback


def _simplex_max(
    A: list[list[Fraction]], b: list[Fraction], c: list[Fraction]
) -> tuple[Fraction, list[Fraction]] | None:
    """max c.z subject to A z = b, z >= 0, via two-phase simplex with
    Bland's rule. Requires b >= 0. Returns (optimum, z) or None if
    infeasible. Raises on an unbounded objective."""
    m, n = len(A), len(c)
    # tableau with artificial variables n..n+m-1
    T = [row[:] + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i, row in enumerate(A)]
    basis = [n + i for i in range(m)]
    width = n + m

    def pivot(row: int, col: int) -> None:
        p = T[row][col]
        T[row] = [v / p for v in T[row]]
        for r in range(m):
            if r != row and T[r][col] != 0:
                f = T[r][col]
                T[r] = [a - f * e for a, e in zip(T[r], T[row])]
        basis[row] = col

    def optimize(cost: list[Fraction], allowed: int) -> Fraction:
        """Maximize cost.z over columns < allowed; returns the optimum."""
        while True:
            # reduced costs from the current basis
            y = [cost[basis[r]] for r in range(m)]
            entering = None
            for j in range(allowed):
                if j in basis:
                    continue
                red = cost[j] - sum(y[r] * T[r][j] for r in range(m))
                if red > 0:
                    entering = j
                    break  # Bland: first improving column
            if entering is None:
                obj = sum(cost[basis[r]] * T[r][width] for r in range(m))
                return obj
            leaving = None
            best = None
            for r in range(m):
                if T[r][entering] > 0:
                    ratio = T[r][width] / T[r][entering]
                    if best is None or ratio < best or (
                        ratio == best and basis[r] < basis[leaving]
                    ):
                        best = ratio
                        leaving = r
            if leaving is None:
                raise ArithmeticError("unbounded linear program")
            pivot(leaving, entering)

    # phase 1: drive artificials to zero
    phase1_cost = [_ZERO] * n + [Fraction(-1)] * m
    if optimize(phase1_cost, width) < 0:
        return None
    # pivot any artificial still in the basis out where possible
    for r in range(m):
        if basis[r] >= n:
            col = next((j for j in range(n) if T[r][j] != 0), None)
            if col is not None:
                pivot(r, col)
    # phase 2 over the original columns only
    full_cost = c + [_ZERO] * m
    opt = optimize(full_cost, n)
    z = [_ZERO] * n
    for r in range(m):
        if basis[r] < n:
            z[basis[r]] = T[r][width]
    return opt, z


def _feasible_simplex(rows: list[_Row], dim: int) -> Vector | None:
    """Maximize the common slack t of the strict constraints; witness when
    the optimum is positive."""
    normalized = _normalize(rows)
    if normalized is _INFEASIBLE:
        return None
    rows = normalized
    m = len(rows)
    # variables: x+ (dim), x- (dim), t+, t-, surplus (m), slack for t<=1
    n_vars = 2 * dim + 2 + m + 1
    A: list[list[Fraction]] = []
    b: list[Fraction] = []
    for i, (coeffs, const, strict) in enumerate(rows):
        row = [_ZERO] * n_vars
        for j, cj in enumerate(coeffs):
            row[j] = cj
            row[dim + j] = -cj
        s = Fraction(1 if strict else 0)
        row[2 * dim] = -s
        row[2 * dim + 1] = s
        row[2 * dim + 2 + i] = Fraction(-1)
        rhs = -const
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        A.append(row)
        b.append(rhs)
    row = [_ZERO] * n_vars
    row[2 * dim] = Fraction(1)
    row[2 * dim + 1] = Fraction(-1)
    row[2 * dim + 2 + m] = Fraction(1)
    A.append(row)
    b.append(Fraction(1))
    cost = [_ZERO] * n_vars
    cost[2 * dim] = Fraction(1)
    cost[2 * dim + 1] = Fraction(-1)
    solved = _simplex_max(A, b, cost)
    if solved is None:
        return None
    opt, z = solved
    if opt <= 0:
        return None
    return Vector(z[j] - z[dim + j] for j in range(dim))


# ---------------------------------------------------------------------------
# public entry points


def _system_rows(system: ConstraintSystem) -> list[_Row]:
    return [
        (c.normal.entries, c.offset, c.strict) for c in system.constraints
    ]


def strict_feasible(
    system: ConstraintSystem, *, elimination_max_dim: int = 3
) -> Vector | None:
    """Exact rational witness of the system, or None when infeasible.

    Any returned point satisfies every constraint exactly, strictly where
    marked strict.
    """
    dim = system.ambient_dim
    if dim == 0:
        for c in system.constraints:
            if not c.holds(Vector([])):
                return None
        return Vector([])
    rows = _system_rows(system)
    if dim <= elimination_max_dim:
        witness = _feasible_elimination(rows, dim)
    else:
        witness = _feasible_simplex(rows, dim)
    if witness is not None:
        assert system.satisfied_by(witness)
    return witness


def max_inscribed_ball(
    system: ConstraintSystem, *, cap: Fraction | int = 16
) -> tuple[Vector, Fraction] | None:
    """Center and radius of a large Euclidean ball inside the system.

    Solves max rho subject to n.x + c >= rho * |n|_1 exactly; since
    |n|_1 >= |n|_2 the returned ball is a certified inner ball. The radius
    is capped to keep the program bounded on unbounded regions. Returns
    None when the system has no interior.
    """
    rows = _normalize(_system_rows(system))
    if rows is _INFEASIBLE:
        return None
    dim = system.ambient_dim
    m = len(rows)
    cap = Fraction(cap)
    # variables: x+ (dim), x- (dim), rho, surplus (m), slack for rho <= cap
    n_vars = 2 * dim + 1 + m + 1
    A: list[list[Fraction]] = []
    b: list[Fraction] = []
    for i, (coeffs, const, _strict) in enumerate(rows):
        row = [_ZERO] * n_vars
        for j, cj in enumerate(coeffs):
            row[j] = cj
            row[dim + j] = -cj
        row[2 * dim] = -sum((abs(cj) for cj in coeffs), _ZERO)
        row[2 * dim + 1 + i] = Fraction(-1)
        rhs = -const
        if rhs < 0:
            row = [-v for v in row]
            rhs = -rhs
        A.append(row)
        b.append(rhs)
    row = [_ZERO] * n_vars
    row[2 * dim] = Fraction(1)
    row[2 * dim + 1 + m] = Fraction(1)
    A.append(row)
    b.append(cap)
    cost = [_ZERO] * n_vars
    cost[2 * dim] = Fraction(1)
    solved = _simplex_max(A, b, cost)
    if solved is None:
        return None
    rho, z = solved
    if rho <= 0:
        return None
    return Vector(z[j] - z[dim + j] for j in range(dim)), rho


def max_slack_witness(system: ConstraintSystem) -> Vector | None:
    """A witness maximizing the common slack of the strict constraints
    (capped at 1 after primitive rescaling), via the exact simplex.

    Useful where downstream constructions want points well inside a region
    rather than near its boundary.
    """
    if system.ambient_dim == 0:
        return strict_feasible(system)
    return _feasible_simplex(_system_rows(system), system.ambient_dim)


def feasible_on_hyperplane(
    system: ConstraintSystem,
    eq_normal: Vector,
    eq_offset: Fraction,
    *,
    elimination_max_dim: int = 3,
) -> Vector | None:
    """Witness of ``system`` restricted to the hyperplane eq_normal.x + eq_offset = 0.

    The equality is eliminated by exact substitution, so the remaining
    system keeps its strictness structure.
    """
    pivot = next((i for i, e in enumerate(eq_normal) if e != 0), None)
    if pivot is None:
        if eq_offset != 0:
            return None
        return strict_feasible(system, elimination_max_dim=elimination_max_dim)
    dim = system.ambient_dim
    piv_coeff = eq_normal[pivot]
    # x[pivot] = -(eq_offset + sum_{j != pivot} eq_normal[j] x_j) / piv_coeff
    reduced: list[LinearConstraint] = []
    for c in system.constraints:
        factor = c.normal[pivot] / piv_coeff
        new_normal = [
            c.normal[j] - factor * eq_normal[j] for j in range(dim) if j != pivot
        ]
        new_offset = c.offset - factor * eq_offset
        reduced.append(LinearConstraint(Vector(new_normal), new_offset, c.strict))
    sub = strict_feasible(
        ConstraintSystem.of(reduced, dim - 1),
        elimination_max_dim=elimination_max_dim,
    )
    if sub is None:
        return None
    partial = list(sub.entries)
    others = sum(
        (eq_normal[j] * partial[j if j < pivot else j - 1] for j in range(dim) if j != pivot),
        _ZERO,
    )
    value = -(eq_offset + others) / piv_coeff
    full = partial[:pivot] + [value] + partial[pivot:]
    return Vector(full)
