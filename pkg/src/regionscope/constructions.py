"""Builders that realize the guaranteed region-count constructions as
concrete exact-rational networks, with their counts machine-verified.

Every "generic" choice is drawn from a seeded rational generator and then
certified exactly (general position, bounded all-inactive cell, achieved
region count), with a bounded number of redraws.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .arrangement import (
    Arrangement,
    ArrangementRegion,
    Hyperplane,
    _essential_vertex_points,
    build_tangent_arrangement,
    cross_polytope_constraints,
    enumerate_arrangement_regions,
    in_ball_witnesses,
    is_general_position,
    scale_into_ball,
)
from .bounds import deep_lower_bound, folding_lower_bound
from .errors import ConstructionError
from .feasibility import max_inscribed_ball, max_slack_witness, strict_feasible
from .geometry import (
    AffineMap,
    ConstraintSystem,
    LinearConstraint,
    Matrix,
    Vector,
    affine_inverse,
    rational,
)
from .network import (
    Layer,
    RectifierNet,
    absorb_affine,
    enumerate_activation_regions,
    evaluate,
    merge_linearity_regions,
)
from .seeding import rng_for, seeded_rational, seeded_vector


@dataclass(frozen=True)
class BallSpec:
    """A Euclidean ball with rational data; centers must avoid the axes."""

    center: Vector
    radius: Fraction

    def __post_init__(self):
        if rational(self.radius) <= 0:
            raise ValueError("ball radius must be positive")
        if any(c == 0 for c in self.center):
            raise ValueError("ball center coordinates must all be nonzero")


@dataclass(frozen=True)
class ConstructionReport:
    """A built network together with its claimed and verified region counts."""

    name: str
    net: RectifierNet
    claimed_bound: int
    enumerated_merged: int
    satisfied: bool
    seed: int
    params: tuple[tuple[str, str], ...]

    def __post_init__(self):
        if self.satisfied != (self.enumerated_merged >= self.claimed_bound):
            raise ValueError("satisfied flag contradicts the counts")


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    message: str

    def __bool__(self) -> bool:
        return self.ok


def layer_from_arrangement(arr: Arrangement) -> Layer:
    """The rectifier layer whose unit hyperplanes are the arrangement."""
    return Layer(
        Matrix([h.normal.entries for h in arr.hyperplanes], n_cols=arr.ambient_dim),
        Vector(h.offset for h in arr.hyperplanes),
    )


def _recession_cone_trivial(normals: Sequence[Vector], dim: int) -> bool:
    """Whether {d : n . d <= 0 for all normals} is just the origin."""
    for axis in range(dim):
        for sign in (1, -1):
            constraints = [LinearConstraint(-n, Fraction(0), strict=False) for n in normals]
            probe = Vector.unit(dim, axis).scale(sign)
            constraints.append(LinearConstraint(probe, Fraction(-1), strict=False))
            if strict_feasible(ConstraintSystem.of(constraints, dim)) is not None:
                return False
    return True


# evenly spread planar integer directions (about 15 degrees apart); the
# spread keeps the cells of sampled arrangements comparably sized
_DIRECTIONS_2D = (
    (12, 0), (15, 4), (7, 4), (7, 7), (4, 7), (4, 15),
    (0, 12), (-4, 15), (-4, 7), (-7, 7), (-7, 4), (-15, 4),
    (-12, 0), (-15, -4), (-7, -4), (-7, -7), (-4, -7), (-4, -15),
    (0, -12), (4, -15), (4, -7), (7, -7), (7, -4), (15, -4),
)

_DIRECTIONS_3D = (
    (5, 1, 1), (1, 5, 1), (1, 1, 5), (-5, 1, 1), (1, -5, 1), (1, 1, -5),
    (-1, -5, -1), (-5, -1, -1), (-1, -1, -5), (5, -1, 1), (-1, 5, -1), (1, -1, 5),
)


def _spread_normals(m: int, n0: int, rng) -> list[Vector]:
    """m jittered normals whose line directions stay 180/m degrees apart.

    Keeping the undirected directions separated (not just the normals)
    avoids near-parallel pairs, whose distant crossings would otherwise
    stretch cells into slivers and inflate the normalization scale. Signs
    alternate so the normals also positively span the space.
    """
    if n0 == 1:
        base = [(1,), (-1,)] * ((m + 1) // 2)
        return [
            Vector(b).scale(1 + abs(seeded_rational(rng, max_numerator=3)))
            for b in base[:m]
        ]
    if n0 == 2:
        taken: set[int] = set()
        picks = []
        for i in range(m):
            angle = (i * 180) // m + (i % 2) * 180  # degrees
            idx = round(angle / 15) % 24
            while idx in taken:
                idx = (idx + 1) % 24
            taken.add(idx)
            picks.append(_DIRECTIONS_2D[idx])
    else:
        picks = [_DIRECTIONS_3D[(i * len(_DIRECTIONS_3D)) // m] for i in range(m)]
    normals = []
    for p in picks:
        jitter = [
            seeded_rational(rng, max_numerator=1, max_denominator=4) for _ in range(n0)
        ]
        entries = [Fraction(c) + j for c, j in zip(p, jitter)]
        normals.append(Vector(entries))
    return normals


def generic_gp_arrangement(
    m: int,
    n0: int,
    seed_or_rng,
    *,
    bounded_negative: bool = False,
    max_attempts: int = 256,
) -> Arrangement:
    """Seeded general-position arrangement, certified exactly.

    With ``bounded_negative`` the normals are drawn as a jittered fan that
    positively spans the space and all offsets are negative, so the
    all-inactive cell is a nonempty bounded polytope around the origin and
    no cell degenerates into a sliver.
    """
    rng = seed_or_rng if not isinstance(seed_or_rng, int) else rng_for(seed_or_rng)
    for _ in range(max_attempts):
        if bounded_negative:
            normals = _spread_normals(m, n0, rng)
            offsets = [
                Fraction(-10) - abs(seeded_rational(rng, max_numerator=8, max_denominator=2))
                for _ in range(m)
            ]
        else:
            normals = [seeded_vector(rng, n0, nonzero=True) for _ in range(m)]
            offsets = [
                -1 - abs(seeded_rational(rng, max_numerator=8, max_denominator=4))
                for _ in range(m)
            ]
        if any(n.is_zero() for n in normals):
            continue
        arr = Arrangement.of(
            [Hyperplane(n, o) for n, o in zip(normals, offsets)], n0
        )
        if not is_general_position(arr):
            continue
        if bounded_negative and not _recession_cone_trivial(normals, n0):
            continue
        return arr
    raise ConstructionError(
        f"no general-position arrangement of {m} hyperplanes in dim {n0} "
        f"found within {max_attempts} seeded attempts"
    )


def build_shallow_generic(n0: int, m: int, seed: int = 0) -> RectifierNet:
    """Single hidden layer whose hyperplanes are in certified general
    position, read out by a seeded generic row."""
    if m < 1:
        raise ValueError("need at least one hidden unit")
    rng = rng_for(seed)
    arr = generic_gp_arrangement(m, n0, rng)
    row = seeded_vector(rng, m, nonzero=True)
    return RectifierNet(
        n0,
        (layer_from_arrangement(arr),),
        Layer(Matrix([row.entries], n_cols=m), Vector([Fraction(0)])),
    )


def maps_to_common_ball(balls: Sequence[BallSpec]) -> tuple[list[AffineMap], Vector]:
    """Diagonal scalings with one shared offset sending every ball onto a
    ball around the origin that contains the unit ball.

    Follows the equalize-then-inflate recipe: coordinatewise factors make
    all centers coincide, and the smallest positive integer inflation pushes
    every scaled radius strictly past 1.
    """
    if not balls:
        raise ValueError("need at least one ball")
    n0 = len(balls[0].center)
    base = balls[0].center
    factors = []
    for ball in balls:
        if len(ball.center) != n0:
            raise ValueError("balls live in different dimensions")
        factors.append(
            Vector(base[j] / ball.center[j] for j in range(n0))
        )
    bound = max(
        1 / (rational(ball.radius) * abs(f))
        for ball, factor in zip(balls, factors)
        for f in factor
    )
    eta = bound.numerator // bound.denominator + 1
    shared_offset = Vector(-eta * base[j] for j in range(n0))
    maps = []
    for ball, factor in zip(balls, factors):
        diag = Matrix(
            [
                [eta * factor[i] if i == j else Fraction(0) for j in range(n0)]
                for i in range(n0)
            ],
            n_cols=n0,
        )
        image_center = diag.matvec(ball.center) + shared_offset
        assert image_center.is_zero()
        assert min(abs(eta * f) * rational(ball.radius) for f in factor) > 1
        maps.append(AffineMap(diag, shared_offset))
    return maps, shared_offset


def _region_by_active_set(
    regions: Sequence[ArrangementRegion], active: tuple[int, ...]
) -> ArrangementRegion:
    for r in regions:
        if r.active_set == active:
            return r
    raise ConstructionError(f"no region with active set {active}")


def _centered_witness(
    arr: Arrangement, region: ArrangementRegion, extra: Sequence[LinearConstraint]
) -> Vector:
    """A point deep inside the region (plus extra constraints); deep points
    keep the downstream ball radii, and with them the replicated cells,
    from collapsing."""
    constraints = [
        LinearConstraint(h.normal.scale(s), rational(s) * h.offset, strict=True)
        for s, h in zip(region.signs, arr.hyperplanes)
    ]
    constraints.extend(extra)
    system = ConstraintSystem.of(constraints, arr.ambient_dim)
    witness = max_slack_witness(system)
    if witness is None:
        witness = strict_feasible(system)
    if witness is None:
        raise ConstructionError(
            f"region {region.sign_string} lost feasibility under extra constraints"
        )
    return witness


def _block_image_ball(
    arr: Arrangement,
    region: ArrangementRegion,
    block: tuple[int, ...],
    extra: Sequence[LinearConstraint],
) -> BallSpec:
    """A large rational ball inside the image of (region + extra
    constraints) under the preactivations of the block units.

    A maximal inscribed ball keeps the downstream inflation factor, and
    with it the weight magnitudes of the absorbed layers, as small as the
    geometry allows."""
    block_map = AffineMap(
        Matrix([arr.hyperplanes[i].normal.entries for i in block], n_cols=arr.ambient_dim),
        Vector(arr.hyperplanes[i].offset for i in block),
    )
    inverse = affine_inverse(block_map)
    if inverse is None:
        raise ConstructionError(f"block {block} units are not independent")
    constraints = [
        LinearConstraint(h.normal.scale(s), rational(s) * h.offset, strict=True)
        for s, h in zip(region.signs, arr.hyperplanes)
    ]
    constraints.extend(extra)
    image_constraints = []
    for c in constraints:
        # push the half-space through the inverse map into image coordinates
        normal = inverse.linear.transpose().matvec(c.normal)
        offset = c.normal.dot(inverse.offset) + c.offset
        image_constraints.append(LinearConstraint(normal, offset, strict=True))
    dim = len(block)
    solved = max_inscribed_ball(ConstraintSystem.of(image_constraints, dim))
    if solved is None:
        raise ConstructionError(f"block {block} region image has no interior")
    center, radius = solved
    if any(coord == 0 for coord in center):
        # slide the center a little inside the ball to clear the axes
        for k in range(2, 12):
            shift = radius / (2 * k * dim)
            candidate = Vector(
                coord + (shift if coord >= 0 else -shift) for coord in center
            )
            if all(coord != 0 for coord in candidate):
                center = candidate
                radius = radius - radius / (2 * k)
                break
        else:
            raise ConstructionError("could not move ball center off the axes")
    return BallSpec(center, radius)


def _blocks(width: int, n0: int) -> list[tuple[int, ...]]:
    p = width // n0
    return [tuple(range(i * n0, (i + 1) * n0)) for i in range(p)]


def _rescale_units(layer: Layer, factors: Sequence[Fraction]) -> Layer:
    """Scale each unit's weights and bias by a positive factor.

    Unit activation regions are unchanged; only preactivation magnitudes
    move, which is used to balance block images before equalization."""
    rows = [
        tuple(f * v for v in row) for f, row in zip(factors, layer.weights.rows)
    ]
    bias = Vector(f * b for f, b in zip(factors, layer.bias))
    return Layer(Matrix(rows, n_cols=layer.weights.n_cols), bias)


def _seeded_output(rng, width: int) -> Layer:
    row = seeded_vector(rng, width, nonzero=True)
    return Layer(Matrix([row.entries], n_cols=width), Vector([Fraction(0)]))


def build_deep_theorem_net(
    n0: int, widths: Sequence[int], seed: int = 0, *, jobs: int = 1
) -> ConstructionReport:
    """Deep net achieving the product-of-replications lower bound.

    Layer 1 is a consecutive-interval arrangement normalized into the unit
    ball; each further layer folds an intermediary map (diagonal block
    scalings onto a common ball, surplus columns zeroed) into a fresh
    arrangement normalized into the unit ball: consecutive-interval for
    middle layers, certified generic for the last.
    """
    widths = list(widths)
    if n0 != 2:
        raise ValueError(
            "the replication construction is only built for two inputs; its "
            "first-layer arrangement is essentially planar, so block images "
            "degenerate in higher input dimensions"
        )
    if not widths:
        raise ValueError("need at least one hidden layer")
    if any(w < n0 for w in widths):
        raise ValueError(f"every width must be at least {n0}")
    rng = rng_for(seed)
    claimed = deep_lower_bound(n0, widths)
    unit_ball = Fraction(1)
    origin = Vector.zero(n0)

    for _ in range(16):
        k = len(widths)
        if k == 1:
            arr = scale_into_ball(
                generic_gp_arrangement(widths[0], n0, rng, bounded_negative=True),
                unit_ball,
                origin,
            )
            layers = [layer_from_arrangement(arr)]
        else:
            # the first arrangement needs no normalization: its block cells
            # are the replication domains, nothing upstream constrains them
            arr = build_tangent_arrangement(widths[0], n0)
            layers = [layer_from_arrangement(arr)]
            prev_arr = arr
            first_stage = True
            home = 1 + max(
                (p.norm1() for p in _essential_vertex_points(arr)), default=Fraction(1)
            )
            for depth in range(1, k):
                if first_stage:
                    # keep the replication pockets inside the home window of
                    # the first arrangement (just past its crossings)
                    extra = cross_polytope_constraints(home, origin)
                else:
                    extra = cross_polytope_constraints(unit_ball, origin)
                by_active = {
                    r.active_set: r for r in enumerate_arrangement_regions(prev_arr)
                }
                blocks = _blocks(len(prev_arr), n0)
                raw_balls = [
                    _block_image_ball(prev_arr, by_active[b], b, extra) for b in blocks
                ]
                # rescale the feeding layer so every block ball recenters at
                # (1,...,1); equalization then needs no uneven stretching
                scale_factors = [Fraction(1)] * len(prev_arr)
                balls = []
                ones = Vector([Fraction(1)] * n0)
                for block, ball in zip(blocks, raw_balls):
                    for j, u in enumerate(block):
                        scale_factors[u] = 1 / ball.center[j]
                    balls.append(BallSpec(ones, ball.radius / max(ball.center)))
                layers[-1] = _rescale_units(layers[-1], scale_factors)
                maps, shared_offset = maps_to_common_ball(balls)
                intermediary_linear = [
                    [Fraction(0)] * len(prev_arr) for _ in range(n0)
                ]
                for block, map_ in zip(blocks, maps):
                    for j in range(n0):
                        intermediary_linear[j][block[j]] = map_.linear.rows[j][j]
                intermediary = AffineMap(
                    Matrix(intermediary_linear, n_cols=len(prev_arr)), shared_offset
                )
                if depth < k - 1:
                    next_arr = scale_into_ball(
                        build_tangent_arrangement(widths[depth], n0), unit_ball, origin
                    )
                else:
                    next_arr = scale_into_ball(
                        generic_gp_arrangement(widths[depth], n0, rng, bounded_negative=True),
                        unit_ball,
                        origin,
                    )
                layers.append(absorb_affine(intermediary, layer_from_arrangement(next_arr)))
                prev_arr = next_arr
                first_stage = False
        net = RectifierNet(n0, tuple(layers), _seeded_output(rng, widths[-1]))
        merged = merge_linearity_regions(
            enumerate_activation_regions(net, jobs=jobs)
        ).merged_count
        if merged >= claimed:
            return ConstructionReport(
                name="deep",
                net=net,
                claimed_bound=claimed,
                enumerated_merged=merged,
                satisfied=True,
                seed=seed,
                params=(("n0", str(n0)), ("widths", ",".join(map(str, widths)))),
            )
    raise ConstructionError("deep construction kept missing its bound across redraws")


def build_folding_net(n0: int, k: int, seed: int = 0, *, jobs: int = 1) -> ConstructionReport:
    """Net of k layers of 2*n0 units built from rectifier pairs whose sums
    fold each coordinate, with a generic final arrangement placed in the
    common folded cube.

    Layer 1 computes rect(+-x_j) with zero bias; each later layer absorbs
    the pair-summing matrix and a recentering shift of 2^-stage, so the two
    half-spaces of every coordinate land on one image. The final layer's
    arrangement keeps its all-inactive cell bounded near the origin, which
    pins the replicated counts exactly.
    """
    if k < 1 or n0 < 1:
        raise ValueError("need k >= 1 and n0 >= 1")
    rng = rng_for(seed)
    width = 2 * n0
    claimed = folding_lower_bound(n0, k)
    origin = Vector.zero(n0)

    pair_rows = []
    for j in range(n0):
        pair_rows.append(Vector.unit(n0, j).entries)
        pair_rows.append((-Vector.unit(n0, j)).entries)
    fold_weights = Matrix(pair_rows, n_cols=n0)
    pair_sum = Matrix(
        [
            [Fraction(1) if 2 * j <= i <= 2 * j + 1 else Fraction(0) for i in range(width)]
            for j in range(n0)
        ],
        n_cols=width,
    )

    for _ in range(16):
        if k == 1:
            arr = generic_gp_arrangement(width, n0, rng, bounded_negative=True)
            layers = [layer_from_arrangement(scale_into_ball(arr, Fraction(1), origin))]
        else:
            layers = [Layer(fold_weights, Vector.zero(width))]
            for stage in range(1, k):
                shift = Fraction(-1, 2 ** stage)
                intermediary = AffineMap(pair_sum, Vector([shift] * n0))
                if stage < k - 1:
                    core = Layer(fold_weights, Vector.zero(width))
                else:
                    radius = Fraction(1, 2 ** (k - 1))
                    arr = scale_into_ball(
                        generic_gp_arrangement(width, n0, rng, bounded_negative=True),
                        radius,
                        origin,
                    )
                    core = layer_from_arrangement(arr)
                layers.append(absorb_affine(intermediary, core))
        net = RectifierNet(n0, tuple(layers), _seeded_output(rng, width))
        merged = merge_linearity_regions(
            enumerate_activation_regions(net, jobs=jobs)
        ).merged_count
        if merged >= claimed:
            return ConstructionReport(
                name="folding",
                net=net,
                claimed_bound=claimed,
                enumerated_merged=merged,
                satisfied=True,
                seed=seed,
                params=(("n0", str(n0)), ("k", str(k))),
            )
    raise ConstructionError("folding construction kept missing its bound across redraws")


def verify_construction(report: ConstructionReport, *, jobs: int = 1) -> VerificationResult:
    """Re-enumerate the report's network and re-check its claims.

    For folding networks the coordinate-flip symmetry of the computed
    function is also spot-checked at seeded rational points.
    """
    merged = merge_linearity_regions(
        enumerate_activation_regions(report.net, jobs=jobs)
    ).merged_count
    problems = []
    if merged != report.enumerated_merged:
        problems.append(
            f"re-enumeration found {merged} merged regions, report says "
            f"{report.enumerated_merged}"
        )
    if merged < report.claimed_bound:
        problems.append(
            f"claimed bound {report.claimed_bound} exceeds enumerated {merged}"
        )
    params = dict(report.params)
    if report.name == "folding" and int(params.get("k", "1")) >= 2:
        rng = rng_for(report.seed + 1)
        n0 = report.net.input_dim
        for _ in range(5):
            x = seeded_vector(rng, n0)
            for j in range(n0):
                flipped = Vector(
                    -x[i] if i == j else x[i] for i in range(n0)
                )
                if evaluate(report.net, x) != evaluate(report.net, flipped):
                    problems.append(
                        f"folding symmetry broken at {x} on coordinate {j}"
                    )
                    break
    if problems:
        return VerificationResult(False, "; ".join(problems))
    return VerificationResult(
        True,
        f"verified: {merged} merged regions >= claimed {report.claimed_bound}",
    )
