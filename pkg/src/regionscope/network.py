"""Rectifier networks: exact evaluation and input-space region enumeration.

A unit is active exactly when its preactivation is positive (zero counts as
inactive), so regions are open and strict feasibility is the only geometric
primitive. Enumeration walks units in layer order, expressing every gating
constraint in input coordinates through the running gated affine map.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DimensionMismatch, InputDimGuard
from .feasibility import feasible_on_hyperplane, strict_feasible
from .geometry import (
    AffineMap,
    ConstraintSystem,
    LinearConstraint,
    Matrix,
    Vector,
    affine_compose,
)

# one bit per unit, grouped by layer; bit 1 means "preactivation > 0"
ActivationPattern = tuple[tuple[int, ...], ...]

_ZERO = Fraction(0)


@dataclass(frozen=True)
class Layer:
    """One affine stage: weights (n_units x n_inputs) and bias (n_units)."""

    weights: Matrix
    bias: Vector

    def __post_init__(self):
        if self.weights.n_rows != len(self.bias):
            raise DimensionMismatch(
                f"layer has {self.weights.n_rows} weight rows but bias of "
                f"length {len(self.bias)}"
            )

    @property
    def n_units(self) -> int:
        return self.weights.n_rows

    @property
    def n_inputs(self) -> int:
        return self.weights.n_cols


@dataclass(frozen=True)
class RectifierNet:
    """Stack of rectified layers with a final linear layer."""

    input_dim: int
    hidden_layers: tuple[Layer, ...]
    output_layer: Layer

    def __post_init__(self):
        if not self.hidden_layers:
            raise ValueError("need at least one hidden layer")
        expected = self.input_dim
        for i, layer in enumerate(self.hidden_layers):
            if layer.n_inputs != expected:
                raise DimensionMismatch(
                    f"hidden layer {i} expects {layer.n_inputs} inputs, "
                    f"previous width is {expected}"
                )
            expected = layer.n_units
        if self.output_layer.n_inputs != expected:
            raise DimensionMismatch(
                f"output layer expects {self.output_layer.n_inputs} inputs, "
                f"last hidden width is {expected}"
            )

    @property
    def hidden_widths(self) -> tuple[int, ...]:
        return tuple(l.n_units for l in self.hidden_layers)

    @property
    def output_dim(self) -> int:
        return self.output_layer.n_units

    def with_output(self, weights: Matrix, bias: Vector) -> "RectifierNet":
        return replace(self, output_layer=Layer(weights, bias))


@dataclass(frozen=True)
class LinearRegion:
    """A maximal open cell of constant activation pattern."""

    pattern: ActivationPattern
    region: ConstraintSystem
    witness: Vector
    map: AffineMap          # input -> network output on this cell
    hidden_map: AffineMap   # input -> last hidden activations on this cell

    @property
    def flat_pattern(self) -> tuple[int, ...]:
        return tuple(b for layer in self.pattern for b in layer)


@dataclass(frozen=True)
class RegionInventory:
    """Enumeration result; merge data is filled in by merge_linearity_regions."""

    regions: tuple[LinearRegion, ...]
    activation_count: int
    merged_count: int | None = None
    merge_labels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.merged_count is not None and self.merged_count > self.activation_count:
            raise ValueError("merged count cannot exceed activation count")


def evaluate(net: RectifierNet, x: Vector) -> Vector:
    """Exact forward pass; hidden layers rectify, the output layer does not."""
    if len(x) != net.input_dim:
        raise DimensionMismatch(f"input of dim {len(x)}, net expects {net.input_dim}")
    h = x
    for layer in net.hidden_layers:
        pre = layer.weights.matvec(h) + layer.bias
        h = Vector(v if v > 0 else _ZERO for v in pre)
    return net.output_layer.weights.matvec(h) + net.output_layer.bias


def activation_pattern(net: RectifierNet, x: Vector) -> ActivationPattern:
    """Per-unit gate bits at x; a zero preactivation reports 0."""
    if len(x) != net.input_dim:
        raise DimensionMismatch(f"input of dim {len(x)}, net expects {net.input_dim}")
    h = x
    pattern = []
    for layer in net.hidden_layers:
        pre = layer.weights.matvec(h) + layer.bias
        pattern.append(tuple(1 if v > 0 else 0 for v in pre))
        h = Vector(v if v > 0 else _ZERO for v in pre)
    return tuple(pattern)


def absorb_affine(pre: AffineMap, layer: Layer) -> Layer:
    """Fold an affine stage into the layer that consumes its output.

    rect(W (M x + c) + b) == rect((W M) x + (W c + b)) pointwise.
    """
    if layer.n_inputs != pre.output_dim:
        raise DimensionMismatch(
            f"layer expects {layer.n_inputs} inputs, affine stage outputs "
            f"{pre.output_dim}"
        )
    return Layer(
        layer.weights.matmul(pre.linear),
        layer.weights.matvec(pre.offset) + layer.bias,
    )


# ---------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class _State:
    """A partial sign assignment, with everything in input coordinates."""

    bits: tuple[tuple[int, ...], ...]
    constraints: tuple[LinearConstraint, ...]
    keys: frozenset
    witness: Vector
    affine: AffineMap  # input -> input of the next unassigned layer


def _unit_functional(layer: Layer, state_affine: AffineMap, unit: int):
    """The unit's preactivation as (row, const) over input coordinates."""
    w = layer.weights.row(unit)
    row = state_affine.linear.transpose().matvec(w)
    const = w.dot(state_affine.offset) + layer.bias[unit]
    return row, const


def _advance_layer(
    net: RectifierNet,
    layer_idx: int,
    state: _State,
    forced: dict | None,
    elimination_max_dim: int,
) -> list[_State]:
    """All feasible gatings of one layer, continuing from ``state``."""
    layer = net.hidden_layers[layer_idx]
    dim = net.input_dim
    functionals = [
        _unit_functional(layer, state.affine, u) for u in range(layer.n_units)
    ]
    results: list[_State] = []

    def descend(unit: int, bits, constraints, keys, witness):
        if unit == layer.n_units:
            rows = []
            offs = []
            for b, (row, const) in zip(bits, functionals):
                if b:
                    rows.append(row.entries)
                    offs.append(const)
                else:
                    rows.append((Fraction(0),) * dim)
                    offs.append(_ZERO)
            gated = AffineMap(Matrix(rows, n_cols=dim), Vector(offs))
            results.append(
                _State(
                    state.bits + (tuple(bits),), constraints, keys, witness, gated
                )
            )
            return
        row, const = functionals[unit]
        if forced is not None and (layer_idx, unit) in forced:
            descend(unit + 1, bits + [forced[(layer_idx, unit)]], constraints, keys, witness)
            return
        if row.is_zero():
            # constant preactivation: the gate is decided, no constraint
            descend(unit + 1, bits + [1 if const > 0 else 0], constraints, keys, witness)
            return
        for bit in (1, 0):
            sign = 1 if bit else -1
            c = LinearConstraint(row.scale(sign), sign * const, strict=True)
            key = c.canonical_key()
            if key in keys:
                descend(unit + 1, bits + [bit], constraints, keys, witness)
                continue
            if LinearConstraint(-c.normal, -c.offset, True).canonical_key() in keys:
                continue  # contradicts an earlier gate
            if c.holds(witness):
                new_witness = witness
            else:
                new_witness = strict_feasible(
                    ConstraintSystem(constraints + (c,), dim),
                    elimination_max_dim=elimination_max_dim,
                )
                if new_witness is None:
                    continue
            descend(
                unit + 1,
                bits + [bit],
                constraints + (c,),
                keys | {key},
                new_witness,
            )

    descend(0, [], state.constraints, state.keys, state.witness)
    return results


def _finish_state(net: RectifierNet, state: _State) -> LinearRegion:
    hidden_map = state.affine
    out = net.output_layer
    full_map = affine_compose(AffineMap(out.weights, out.bias), hidden_map)
    return LinearRegion(
        pattern=state.bits,
        region=ConstraintSystem(state.constraints, net.input_dim),
        witness=state.witness,
        map=full_map,
        hidden_map=hidden_map,
    )


def _complete_states(
    net: RectifierNet,
    states: list[_State],
    first_layer: int,
    forced: dict | None,
    elimination_max_dim: int,
) -> list[LinearRegion]:
    for layer_idx in range(first_layer, len(net.hidden_layers)):
        states = [
            nxt
            for st in states
            for nxt in _advance_layer(net, layer_idx, st, forced, elimination_max_dim)
        ]
    return [_finish_state(net, st) for st in states]


def _worker(args) -> list[LinearRegion]:
    net, state, forced, elim = args
    return _complete_states(net, [state], 1, forced, elim)


def enumerate_activation_regions(
    net: RectifierNet,
    *,
    max_input_dim: int = 3,
    jobs: int = 1,
    forced: dict | None = None,
    elimination_max_dim: int = 3,
) -> RegionInventory:
    """Every activation pattern whose input region has nonempty interior.

    Patterns feasible only on lower-dimensional sets are pruned by strict
    feasibility. ``forced`` pins chosen (layer, unit) gates without adding
    their hyperplanes. ``jobs`` > 1 splits the search after the first hidden
    layer across processes.
    """
    if net.input_dim > max_input_dim:
        raise InputDimGuard(
            f"input dimension {net.input_dim} exceeds the guard "
            f"({max_input_dim}); raise max_input_dim to proceed"
        )
    initial = _State(
        bits=(),
        constraints=(),
        keys=frozenset(),
        witness=Vector.zero(net.input_dim),
        affine=AffineMap.identity(net.input_dim),
    )
    frontier = _advance_layer(net, 0, initial, forced, elimination_max_dim)
    if jobs > 1 and len(net.hidden_layers) > 1 and len(frontier) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = pool.map(
                _worker,
                [(net, st, forced, elimination_max_dim) for st in frontier],
            )
            regions = [r for chunk in chunks for r in chunk]
    else:
        regions = _complete_states(net, frontier, 1, forced, elimination_max_dim)
    regions.sort(key=lambda r: r.flat_pattern)
    return RegionInventory(tuple(regions), activation_count=len(regions))


# ---------------------------------------------------------------------------
# merging regions of equal affine behavior


def _map_key(m: AffineMap):
    return (m.linear.rows, m.offset.entries)


def _facet_adjacent(
    a: LinearRegion, b: LinearRegion, dim: int, elimination_max_dim: int
) -> bool:
    """True when the two open cells share a codimension-1 facet."""
    keys_b = {c.canonical_key(): c for c in b.region.constraints}
    for c in a.region.constraints:
        opposite = LinearConstraint(-c.normal, -c.offset, True)
        if opposite.canonical_key() not in keys_b:
            continue
        kept: dict = {}
        for other in a.region.constraints + b.region.constraints:
            k = other.canonical_key()
            if k == c.canonical_key() or k == opposite.canonical_key():
                continue
            kept.setdefault(k, other)
        witness = feasible_on_hyperplane(
            ConstraintSystem.of(kept.values(), dim),
            c.normal,
            c.offset,
            elimination_max_dim=elimination_max_dim,
        )
        if witness is not None:
            return True
    return False


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def merge_linearity_regions(
    inv: RegionInventory, *, input_dim: int | None = None, elimination_max_dim: int = 3
) -> RegionInventory:
    """Group activation cells into maximal regions of linearity.

    Two cells merge when they share a facet and carry the identical output
    affine map; merging is transitive. Cells meeting only in dimension
    < n-1 stay separate.
    """
    regions = inv.regions
    if not regions:
        return replace(inv, merged_count=0, merge_labels=())
    dim = input_dim if input_dim is not None else regions[0].region.ambient_dim
    uf = _UnionFind(len(regions))
    by_map: dict = {}
    for i, r in enumerate(regions):
        by_map.setdefault(_map_key(r.map), []).append(i)
    for group in by_map.values():
        for a_pos in range(len(group)):
            for b_pos in range(a_pos + 1, len(group)):
                i, j = group[a_pos], group[b_pos]
                if uf.find(i) == uf.find(j):
                    continue
                if _facet_adjacent(regions[i], regions[j], dim, elimination_max_dim):
                    uf.union(i, j)
    roots: dict[int, int] = {}
    labels = []
    for i in range(len(regions)):
        root = uf.find(i)
        if root not in roots:
            roots[root] = len(roots)
        labels.append(roots[root])
    return replace(inv, merged_count=len(roots), merge_labels=tuple(labels))


# ---------------------------------------------------------------------------
# grid sampling oracle


def _grid_coordinates(lo: Fraction, hi: Fraction, resolution: int) -> list[Fraction]:
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    if resolution == 1:
        return [(lo + hi) / 2]
    step = (hi - lo) / (resolution - 1)
    return [lo + k * step for k in range(resolution)]


class _PatternTracer:
    """Shared per-pattern cache of gated functionals for grid scans."""

    def __init__(self, net: RectifierNet):
        self.net = net
        self.cache: dict = {}

    def _stage(self, layer_idx: int, prefix) -> tuple:
        key = (layer_idx, prefix)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        if layer_idx == 0:
            affine = AffineMap.identity(self.net.input_dim)
        else:
            affine = self._gated(layer_idx - 1, prefix)
        layer = self.net.hidden_layers[layer_idx]
        functionals = tuple(
            _unit_functional(layer, affine, u) for u in range(layer.n_units)
        )
        self.cache[key] = functionals
        return functionals

    def _gated(self, layer_idx: int, prefix) -> AffineMap:
        key = ("gated", layer_idx, prefix)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        upstream = prefix[:layer_idx]
        functionals = self._stage(layer_idx, upstream)
        bits = prefix[layer_idx]
        dim = self.net.input_dim
        rows, offs = [], []
        for b, (row, const) in zip(bits, functionals):
            if b:
                rows.append(row.entries)
                offs.append(const)
            else:
                rows.append((Fraction(0),) * dim)
                offs.append(_ZERO)
        gated = AffineMap(Matrix(rows, n_cols=dim), Vector(offs))
        self.cache[key] = gated
        return gated

    def classify(self, x: Vector):
        """(pattern, output map) at x, or None when x sits on a cell boundary."""
        prefix: tuple = ()
        for layer_idx in range(len(self.net.hidden_layers)):
            functionals = self._stage(layer_idx, prefix)
            bits = []
            for row, const in functionals:
                s = row.dot(x) + const
                if s == 0 and not row.is_zero():
                    return None  # on a gating hyperplane of this cell
                bits.append(1 if s > 0 else 0)
            prefix = prefix + (tuple(bits),)
        return prefix, self.output_map(prefix)

    def closure_contains(self, pattern, x: Vector) -> bool:
        """Whether x lies in the closed cell of the given pattern."""
        for layer_idx, bits in enumerate(pattern):
            functionals = self._stage(layer_idx, pattern[:layer_idx])
            for bit, (row, const) in zip(bits, functionals):
                if row.is_zero():
                    continue
                value = row.dot(x) + const
                if (value < 0) if bit else (value > 0):
                    return False
        return True

    def classify_robust(self, x: Vector, scale: Fraction):
        """Like classify, but boundary points are attributed to an adjacent
        open cell whose closure provably contains x."""
        result = self.classify(x)
        if result is not None:
            return result
        for direction in _nudge_directions(self.net.input_dim):
            step = scale / 2
            for _ in range(12):
                candidate = self.classify(x + direction.scale(step))
                if candidate is not None and self.closure_contains(candidate[0], x):
                    return candidate
                step /= 2
        raise ArithmeticError(f"could not attribute boundary point {x} to a cell")

    def output_map(self, pattern) -> AffineMap:
        key = ("out", pattern)
        hit = self.cache.get(key)
        if hit is None:
            hidden = self._gated(len(self.net.hidden_layers) - 1, pattern)
            out = self.net.output_layer
            hit = affine_compose(AffineMap(out.weights, out.bias), hidden)
            self.cache[key] = hit
        return hit


def _nudge_directions(dim: int) -> list[Vector]:
    """Deterministic spread of rational directions for boundary attribution."""
    out = []
    seen = set()
    for entries in _small_int_tuples(dim, 3):
        if all(e == 0 for e in entries):
            continue
        if entries in seen:
            continue
        seen.add(entries)
        out.append(Vector(entries))
    return out


def _small_int_tuples(dim: int, bound: int):
    if dim == 0:
        yield ()
        return
    for rest in _small_int_tuples(dim - 1, bound):
        for v in range(-bound, bound + 1):
            yield (v, *rest)


def sample_affine_pieces(
    net: RectifierNet, box: tuple[Vector, Vector], resolution: int
) -> int:
    """Count the affine pieces visible on a regular grid over the box.

    Every grid point is attributed to an open activation cell (boundary
    points are resolved by an exact nudge-and-recheck), labelled by the
    exact (Jacobian, offset) pair of that cell, and clustered by grid
    adjacency including diagonals. Equal maps seen in separated parts of
    the box count separately; the result never exceeds the exact merged
    count once the box covers all regions and the grid is fine enough.
    """
    lo, hi = box
    if len(lo) != net.input_dim or len(hi) != net.input_dim:
        raise DimensionMismatch("box dimensions do not match the network input")
    if not all(a < b for a, b in zip(lo, hi)):
        raise ValueError("box needs lo < hi in every coordinate")
    dim = net.input_dim
    axes = [_grid_coordinates(lo[i], hi[i], resolution) for i in range(dim)]
    shape = [len(a) for a in axes]
    scale = min(
        (hi[i] - lo[i]) / (resolution - 1) if resolution > 1 else hi[i] - lo[i]
        for i in range(dim)
    )
    total = 1
    for s in shape:
        total *= s
    strides = [1] * dim
    for i in range(dim - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]

    tracer = _PatternTracer(net)
    map_ids: dict = {}
    labels: list[int] = [0] * total
    uf = _UnionFind(total)
    pattern_rep: dict = {}
    idx = [0] * dim
    for flat in range(total):
        point = Vector(axes[d][idx[d]] for d in range(dim))
        pattern, out_map = tracer.classify_robust(point, scale)
        key = _map_key(out_map)
        labels[flat] = map_ids.setdefault(key, len(map_ids))
        # one activation cell is convex, hence a single piece: all its grid
        # points belong together no matter how the grid slices it
        rep = pattern_rep.setdefault(pattern, flat)
        if rep != flat:
            uf.union(rep, flat)
        for d in range(dim - 1, -1, -1):
            idx[d] += 1
            if idx[d] < shape[d]:
                break
            idx[d] = 0

    offsets = [
        off
        for off in _small_int_tuples(dim, 1)
        if any(off) and (off[next(i for i, v in enumerate(off) if v)] > 0)
    ]
    idx = [0] * dim
    for flat in range(total):
        for off in offsets:
            nb = flat
            ok = True
            for d in range(dim):
                j = idx[d] + off[d]
                if j < 0 or j >= shape[d]:
                    ok = False
                    break
                nb += off[d] * strides[d]
            if ok and labels[nb] == labels[flat]:
                uf.union(flat, nb)
        for d in range(dim - 1, -1, -1):
            idx[d] += 1
            if idx[d] < shape[d]:
                break
            idx[d] = 0
    return len({uf.find(flat) for flat in range(total)})


# ---------------------------------------------------------------------------
# output projection


def identity_output_net(net: RectifierNet) -> RectifierNet:
    """The same hidden stack read out by the identity map."""
    width = net.hidden_layers[-1].n_units
    return net.with_output(Matrix.identity(width), Vector.zero(width))


def output_projection_preserves_regions(
    net: RectifierNet, seed: int, *, jobs: int = 1
) -> bool:
    """Whether a seeded generic single output row keeps the merged count of
    the identity-output network."""
    from .seeding import seeded_vector

    width = net.hidden_layers[-1].n_units
    row = seeded_vector(seed, width, nonzero=True)
    projected = net.with_output(Matrix([row.entries], n_cols=width), Vector.zero(1))
    base = merge_linearity_regions(
        enumerate_activation_regions(identity_output_net(net), jobs=jobs)
    )
    proj = merge_linearity_regions(enumerate_activation_regions(projected, jobs=jobs))
    return base.merged_count == proj.merged_count
