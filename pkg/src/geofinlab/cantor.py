"""Cantor sets of boundary directions avoiding a separated family of geodesics.

An ``IntervalFamily`` is a finite set of disjoint open intervals in (0, 1),
the shadows of geodesic lines after normalizing one boundary line to span
[0, 1]. The randomized nested-triadic sampler picks ``J_0 = [0,1] > J_1 > ...``
one third at a time, steering away from any interval that overlaps the current
triadic interval by a noticeable amount. All interval arithmetic in the
sampler and the checks is exact (``Fraction`` or integer numerators on a
``3^-G`` grid).

Two sampler implementations exist on purpose: ``sample_path`` walks a single
path with ``Fraction`` arithmetic and works for any family, ``sample_paths``
runs many paths at once with int64 numpy arrays on a triadic grid. Both read
the same per-path random stream and must agree digit for digit.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateConfigurationError,
    DomainError,
    GenerationFailure,
    InvariantViolation,
    ResourceError,
)
from .geometry import (
    GeodesicLine,
    SWAP_ZERO_ONE,
    is_infinite,
    line_distance,
    line_relation,
    mobius_point,
    mobius_to_zero_one,
)
from .runtime import map_blocks

GRID_EXPONENT = 38  # 3**39 overflows int64, 3**38 leaves room for sums
MIN_SYNTH_APRIME = 5000
MAX_BOX_DEPTH = 20
MAX_SAMPLE_DEPTH = GRID_EXPONENT - 1


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def lb_quantity(x, y):
    """Separation of ``(x, y)`` from the normalizing line over [0, 1]:
    ``x (1 - y) / (y - x)``."""
    return x * (1 - y) / (y - x)


def lc_quantity(left, right):
    """Cross-ratio separation of two intervals with ``left`` before ``right``."""
    x1, y1 = left
    x2, y2 = right
    return (x2 - y1) * (y2 - x1) / ((y1 - x1) * (y2 - x2))


def separation_ratio(a, b, c):
    """``b (a + b + c) / (a c)``: the L-c quantity of intervals with lengths
    a, c and gap b. Increasing in b, decreasing in a and c."""
    return b * (a + b + c) / (a * c)


@dataclass(frozen=True)
class IntervalFamily:
    """Disjoint open intervals of (0, 1) sorted by left endpoint.

    ``aprime`` is the claimed separation (``sinh(A/2)^2``) or ``None`` for
    families that make no separation claim (for example the middle-thirds
    control family).
    """

    intervals: tuple
    aprime: float | None = None
    _xs: tuple = field(init=False, repr=False, compare=False)
    _ys: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ivs = tuple(sorted((_frac(x), _frac(y)) for x, y in self.intervals))
        for x, y in ivs:
            if not 0 < x < y < 1:
                raise ConfigurationError(f"interval ({x}, {y}) is not inside (0, 1)")
        for (_, y1), (x2, _) in zip(ivs, ivs[1:]):
            if x2 < y1:
                raise ConfigurationError(f"intervals overlap near {float(x2)}")
        object.__setattr__(self, "intervals", ivs)
        object.__setattr__(self, "_xs", tuple(x for x, _ in ivs))
        object.__setattr__(self, "_ys", tuple(y for _, y in ivs))

    def __len__(self):
        return len(self.intervals)

    def overlapping(self, lo: Fraction, hi: Fraction):
        """Indices of intervals meeting the open interval (lo, hi)."""
        start = bisect.bisect_right(self._ys, lo)
        stop = bisect.bisect_left(self._xs, hi)
        return range(start, max(start, stop))

    def grid_numerators(self, exponent: int = GRID_EXPONENT):
        """Endpoints as integer numerators over ``3**exponent``, or ``None``
        if some endpoint is not on that grid."""
        n = 3**exponent
        xs, ys = [], []
        for x, y in self.intervals:
            if (x * n).denominator != 1 or (y * n).denominator != 1:
                return None
            xs.append(int(x * n))
            ys.append(int(y * n))
        return np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64)

    def to_dict(self) -> dict:
        return {
            "aprime": self.aprime,
            "intervals": [[str(x), str(y)] for x, y in self.intervals],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IntervalFamily":
        try:
            ivs = [(Fraction(str(x)), Fraction(str(y))) for x, y in data["intervals"]]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigurationError(f"malformed interval family: {exc}") from None
        return cls(tuple(ivs), data.get("aprime"))


@dataclass
class SeparationReport:
    ok: bool
    violations: list

    def __iter__(self):
        return iter((self.ok, self.violations))


def check_separation(family: IntervalFamily, aprime=None) -> SeparationReport:
    """Evaluate the single-interval and pairwise separation quantities against
    ``aprime`` (defaults to the family's own claim) in exact arithmetic."""
    target = family.aprime if aprime is None else aprime
    if target is None:
        raise DomainError("no separation threshold given")
    target = _frac(target)
    violations = []
    ivs = family.intervals
    for i, (x, y) in enumerate(ivs):
        q = lb_quantity(x, y)
        if q < target:
            violations.append({"kind": "single", "index": i, "value": float(q)})
    for i in range(len(ivs)):
        for j in range(i + 1, len(ivs)):
            q = lc_quantity(ivs[i], ivs[j])
            if q < target:
                violations.append({"kind": "pair", "pair": [i, j], "value": float(q)})
    return SeparationReport(not violations, violations)


# ---------------------------------------------------------------------------
# Families from geodesic lines
# ---------------------------------------------------------------------------

def _far_arc(line: GeodesicLine, base: complex):
    """Endpoints of the boundary arc cut off by ``line`` away from ``base``,
    as Cayley angles (start, span) going counterclockwise."""
    # send base to i; the far arc is then the one shorter than pi
    def move(x):
        return x if is_infinite(x) else (x - base.real) / base.imag

    u, v = move(line.x), move(line.y)
    au, av = _cayley(u), _cayley(v)
    span = (av - au) % (2 * math.pi)
    if span < math.pi:
        return au, span, (line.x, line.y)
    return av, 2 * math.pi - span, (line.y, line.x)


def _cayley(x) -> float:
    return math.pi if is_infinite(x) else 2.0 * math.atan(x)


def _arc_inside(inner, outer) -> bool:
    two_pi = 2 * math.pi
    off = (inner[0] - outer[0]) % two_pi
    return off + inner[1] <= outer[1] + 1e-15


def _on_line(line: GeodesicLine, z: complex) -> bool:
    if is_infinite(line.x) or is_infinite(line.y):
        e = line.y if is_infinite(line.x) else line.x
        return math.isclose(z.real, e, rel_tol=0, abs_tol=1e-12)
    c, r = 0.5 * (line.x + line.y), 0.5 * abs(line.y - line.x)
    return math.isclose(abs(z - c), r, rel_tol=1e-12, abs_tol=1e-12)


def boundary_lines(lines, base: complex):
    """Lines bounding the component of the complement containing ``base``:
    those whose far arcs are maximal."""
    arcs = [_far_arc(l, base) for l in lines]
    keep = []
    for i, arc in enumerate(arcs):
        if not any(j != i and _arc_inside(arc, arcs[j]) for j in range(len(arcs))):
            keep.append(i)
    return keep


def family_from_lines(lines, base: complex, anchor: int = 0, slack: float = 1e-9):
    """Normalize a separated set of lines into an ``IntervalFamily``.

    The ``anchor``-th boundary line is sent to the geodesic over [0, 1] with
    ``base`` above it; the remaining boundary lines become intervals of (0, 1).
    ``aprime`` is ``sinh(d/2)^2`` for the smallest distance ``d`` between
    boundary lines, shrunk by a relative ``slack`` to absorb float rounding.
    """
    lines = list(lines)
    base = complex(base)
    if base.imag <= 0:
        raise DomainError("base point must lie in the upper half plane")
    if not lines:
        raise DomainError("at least one line is required")
    for i in range(len(lines)):
        if _on_line(lines[i], base):
            raise DegenerateConfigurationError(f"base point lies on line {i}")
        for j in range(i + 1, len(lines)):
            rel = line_relation(lines[i], lines[j])
            if rel != "disjoint":
                raise ConfigurationError(f"lines {i} and {j} are {rel}")
    keep = boundary_lines(lines, base)
    bounding = [lines[i] for i in keep]
    if not 0 <= anchor < len(bounding):
        raise DomainError(f"anchor {anchor} out of range for {len(bounding)} boundary lines")
    l0 = bounding[anchor]
    m = mobius_to_zero_one(l0.x, l0.y)
    swap = abs(mobius_point(m, base) - 0.5) >= 0.5
    # images are computed exactly: float endpoints are rationals, and the
    # unnormalized matrix has the same boundary action
    exact = _exact_zero_one(l0.x, l0.y, m)
    if swap:
        exact = _mat_mul(tuple(tuple(int(v) for v in row) for row in SWAP_ZERO_ONE), exact)
    intervals = []
    for i, l in enumerate(bounding):
        if i == anchor:
            continue
        u, v = _exact_boundary(exact, l.x), _exact_boundary(exact, l.y)
        intervals.append((min(u, v), max(u, v)))
    if len(bounding) > 1:
        dmin = min(
            line_distance(bounding[i], bounding[j]).distance
            for i in range(len(bounding))
            for j in range(i + 1, len(bounding))
        )
        aprime = math.sinh(dmin / 2.0) ** 2 * (1.0 - slack)
    else:
        aprime = None
    return IntervalFamily(tuple(intervals), aprime)


def _exact_zero_one(u, v, approx):
    """Fraction matrix with the same boundary action as ``approx`` (the
    output of ``mobius_to_zero_one(u, v)``), up to a positive scalar."""
    for p, q in ((u, v), (v, u)):
        if is_infinite(p):
            r = _frac(q) + 1
            m = ((0, _frac(q) - r), (1, -r))
        elif is_infinite(q):
            r = _frac(p) + 1
            m = ((1, -_frac(p)), (1, -r))
        else:
            p, q = _frac(p), _frac(q)
            m = ((1, -p), (0, q - p))
        if m[0][0] * m[1][1] - m[0][1] * m[1][0] > 0:
            return m
    raise AssertionError("unreachable: one of the two orientations is positive")


def _mat_mul(a, b):
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)) for i in range(2))


def _exact_boundary(m, x) -> Fraction:
    (a, b), (c, d) = m
    if is_infinite(x):
        if c == 0:
            raise DomainError("boundary line is sent through infinity")
        return Fraction(a) / c
    x = _frac(x)
    den = c * x + d
    if den == 0:
        raise DomainError("boundary line is sent through infinity")
    return (a * x + b) / den


# ---------------------------------------------------------------------------
# Synthetic families
# ---------------------------------------------------------------------------

def _fits(x, y, existing, aprime) -> bool:
    if not 0 < x < y < 1:
        return False
    if lb_quantity(x, y) < aprime:
        return False
    for ex, ey in existing:
        if ey <= x:
            if lc_quantity((ex, ey), (x, y)) < aprime:
                return False
        elif y <= ex:
            if lc_quantity((x, y), (ex, ey)) < aprime:
                return False
        else:
            return False
    return True


def greedy_family(aprime: float, count: int, seed: int, grid_exponent: int = GRID_EXPONENT,
                  max_tries: int = 2000) -> IntervalFamily:
    """Greedy random family with separation ``aprime`` and endpoints on the
    ``3^-grid_exponent`` grid. No lower limit on ``aprime``."""
    rng = np.random.default_rng(seed)
    n = 3**grid_exponent
    target = Fraction(aprime)
    float_ivs: list = []
    exact_ivs: list = []
    for _ in range(count):
        for _attempt in range(max_tries):
            c = float(rng.uniform(0.0, 1.0))
            hi = min(c, 1.0 - c)
            if not _fits(c - hi * 1e-12, c + hi * 1e-12, float_ivs, aprime):
                continue
            lo = 0.0
            for _ in range(64):
                mid = 0.5 * (lo + hi)
                if _fits(c - mid, c + mid, float_ivs, aprime):
                    lo = mid
                else:
                    hi = mid
            r = lo * float(rng.uniform(0.5, 1.0))
            xn = math.ceil(Fraction(c - r) * n)
            yn = math.floor(Fraction(c + r) * n)
            if yn - xn < 2:
                continue
            cand = (Fraction(xn, n), Fraction(yn, n))
            if not _fits(cand[0], cand[1], exact_ivs, target):
                continue
            exact_ivs.append(cand)
            float_ivs.append((float(cand[0]), float(cand[1])))
            break
        else:
            raise GenerationFailure(
                f"could not place interval {len(exact_ivs) + 1} of {count} after {max_tries} tries"
            )
    return IntervalFamily(tuple(exact_ivs), aprime)


def synth_family(aprime: float, count: int, seed: int, max_tries: int = 2000) -> IntervalFamily:
    """Random separated family for sampler experiments (requires aprime > 5000)."""
    if aprime <= MIN_SYNTH_APRIME:
        raise DomainError(f"aprime must exceed {MIN_SYNTH_APRIME}, got {aprime}")
    if count < 1:
        raise DomainError("count must be at least 1")
    fam = greedy_family(aprime, count, seed, max_tries=max_tries)
    ok, violations = check_separation(fam)
    if not ok:
        raise InvariantViolation(f"generated family fails separation: {violations[:3]}")
    return fam


def middle_thirds_family(depth: int) -> IntervalFamily:
    """All open middle-third gaps down to level ``depth``; the complement is
    the level-``depth`` approximation of the classical Cantor set."""
    if depth < 1:
        raise DomainError("depth must be at least 1")
    gaps = []
    lefts = [0]
    for k in range(1, depth + 1):
        scale = 3**k
        gaps.extend((Fraction(3 * a + 1, scale), Fraction(3 * a + 2, scale)) for a in lefts)
        lefts = [3 * a + t for a in lefts for t in (0, 2)]
    return IntervalFamily(tuple(gaps), None)


# ---------------------------------------------------------------------------
# Classification and the exact sampler
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    regular: bool
    blocker: int | None = None


def _overlaps(family: IntervalFamily, level: int, numerator: int):
    h = Fraction(1, 3**level)
    lo = numerator * h
    hi = lo + h
    out = []
    for i in family.overlapping(lo, hi):
        x, y = family.intervals[i]
        ov = min(hi, y) - max(lo, x)
        if ov > 0:
            out.append((i, ov))
    return lo, hi, h, out


def classify_interval(level: int, numerator: int, family: IntervalFamily) -> Classification:
    """Classify ``J = [a 3^-k, (a+1) 3^-k]``.

    Regular when every overlap with the family is below ``3^-k-2``; otherwise
    the unique interval overlapping by at least that much is the blocker.
    Raises ``InvariantViolation`` if ``J`` fails the length invariant
    ``|J ∩ I| < 3^-k-1`` or if two blockers exist.
    """
    if not 0 <= numerator < 3**level:
        raise DomainError(f"numerator {numerator} out of range at level {level}")
    _, _, h, overlaps = _overlaps(family, level, numerator)
    third, ninth = h / 3, h / 9
    blockers = []
    for i, ov in overlaps:
        if ov >= third:
            raise InvariantViolation(
                f"length invariant fails at level {level}: overlap {float(ov):.3e} with interval {i}"
            )
        if ov >= ninth:
            blockers.append(i)
    if len(blockers) > 1:
        raise InvariantViolation(f"interval at level {level} has several blockers {blockers}")
    if blockers:
        return Classification(False, blockers[0])
    return Classification(True, None)


def blockers_of(level: int, numerator: int, family: IntervalFamily):
    """All indices overlapping ``J`` by at least ``3^-k-2`` (no uniqueness check)."""
    _, _, h, overlaps = _overlaps(family, level, numerator)
    return [i for i, ov in overlaps if ov >= h / 9]


def allowed_thirds(level: int, numerator: int, family: IntervalFamily, cls: Classification):
    if cls.regular:
        return [0, 1, 2]
    x, y = family.intervals[cls.blocker]
    step = Fraction(1, 3 ** (level + 1))
    out = []
    for t in range(3):
        lo = (3 * numerator + t) * step
        if y <= lo or x >= lo + step:
            out.append(t)
    if not out:
        raise InvariantViolation(f"no third of the level-{level} interval avoids the blocker")
    return out


def path_draws(seed: int, index: int, depth: int) -> np.ndarray:
    """Uniform draws for path ``index``; an independent stream per (seed, index)."""
    return np.random.default_rng([seed, index]).random(depth)


@dataclass
class TriadicPath:
    depth: int
    numerator: int
    choices: str
    irregular: list

    @property
    def left(self) -> Fraction:
        return Fraction(self.numerator, 3**self.depth)

    @property
    def irregular_count(self) -> int:
        return sum(self.irregular)


def _require_sampleable(family: IntervalFamily, depth: int):
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    if len(family):
        if family.aprime is None or family.aprime <= MIN_SYNTH_APRIME:
            raise DomainError("sampling needs a family with aprime above 5000")
        ok, violations = check_separation(family)
        if not ok:
            raise ConfigurationError(f"family fails its separation claim: {violations[:3]}")


def sample_path(family: IntervalFamily, depth: int, seed: int, index: int = 0,
                validate: bool = True) -> TriadicPath:
    """Sample ``J_0 > ... > J_depth`` with exact rational bookkeeping."""
    if validate:
        _require_sampleable(family, depth)
    draws = path_draws(seed, index, depth)
    a = 0
    digits, irregular = [], []
    for k in range(depth):
        cls = classify_interval(k, a, family)
        opts = allowed_thirds(k, a, family, cls)
        t = opts[int(draws[k] * len(opts))]
        digits.append(str(t))
        irregular.append(not cls.regular)
        a = 3 * a + t
    # the final interval must also satisfy the length invariant
    _, _, h, overlaps = _overlaps(family, depth, a)
    for i, ov in overlaps:
        if ov >= h / 3:
            raise InvariantViolation(f"length invariant fails at final level with interval {i}")
    return TriadicPath(depth, a, "".join(digits), irregular)


# ---------------------------------------------------------------------------
# Vectorized sampler
# ---------------------------------------------------------------------------

@dataclass
class BatchResult:
    numerators: np.ndarray
    irregular_counts: np.ndarray
    length_violations: int
    double_blocks: int
    dead_ends: int
    contained: int  # final intervals lying inside some family interval

    @property
    def violations(self) -> int:
        return self.length_violations + self.double_blocks + self.dead_ends + self.contained


def _batch_block(xs, ys, depth, seed, start, stop, grid_exponent):
    n = stop - start
    u = np.stack([path_draws(seed, i, depth) for i in range(start, stop)]) if n else np.zeros((0, depth))
    a = np.zeros(n, dtype=np.int64)
    irregular = np.zeros(n, dtype=np.int64)
    length_bad = np.zeros(n, dtype=bool)
    double = np.zeros(n, dtype=bool)
    dead = np.zeros(n, dtype=bool)
    m = len(xs)
    for k in range(depth + 1):
        h = 3 ** (grid_exponent - k)
        lo = a * h
        hi = lo + h
        if m:
            first = np.searchsorted(ys, lo, side="right")
            last = np.searchsorted(xs, hi, side="left")
            count = np.maximum(last - first, 0)
            nblock = np.zeros(n, dtype=np.int64)
            blocker = np.zeros(n, dtype=np.int64)
            for j in range(int(count.max(initial=0))):
                live = j < count
                idx = np.minimum(first + j, m - 1)
                ov = np.minimum(hi, ys[idx]) - np.maximum(lo, xs[idx])
                ov = np.where(live, ov, 0)
                length_bad |= ov >= h // 3
                if k < depth:
                    hit = ov >= h // 9
                    nblock += hit
                    blocker = np.where(hit, idx, blocker)
        if k == depth:
            break
        step = h // 3
        allowed = np.ones((n, 3), dtype=bool)
        if m:
            irr = nblock > 0
            double |= nblock > 1
            irregular += irr
            bx, by = xs[blocker], ys[blocker]
            for t in range(3):
                c_lo = lo + t * step
                disjoint = (by <= c_lo) | (bx >= c_lo + step)
                allowed[:, t] = ~irr | disjoint
        n_allowed = allowed.sum(axis=1)
        dead |= n_allowed == 0
        r = np.floor(u[:, k] * np.maximum(n_allowed, 1)).astype(np.int64)
        rank = np.cumsum(allowed, axis=1) - 1
        t = np.argmax(allowed & (rank == r[:, None]), axis=1)
        a = 3 * a + t
    contained = np.zeros(n, dtype=bool)
    if m:
        h = 3 ** (grid_exponent - depth)
        lo = a * h
        idx = np.clip(np.searchsorted(ys, lo, side="right"), 0, m - 1)
        contained = (xs[idx] < lo) & (lo + h < ys[idx])
    return (a, irregular, int(length_bad.sum()), int(double.sum()), int(dead.sum()),
            int(contained.sum()))


def sample_paths(family: IntervalFamily, depth: int, n_paths: int, seed: int,
                 threads: int | None = None, grid_exponent: int = GRID_EXPONENT) -> BatchResult:
    """Sample ``n_paths`` independent paths and count invariant violations.

    Needs endpoints on the ``3^-grid_exponent`` grid (as produced by
    ``synth_family``) and ``depth < grid_exponent``. Path ``i`` matches
    ``sample_path(family, depth, seed, index=i)``.
    """
    _require_sampleable(family, depth)
    if depth > grid_exponent - 1:
        raise ResourceError(f"depth {depth} exceeds the grid resolution {grid_exponent - 1}")
    if n_paths < 0:
        raise DomainError("n_paths must be nonnegative")
    grid = family.grid_numerators(grid_exponent)
    if grid is None:
        raise DomainError("family endpoints are not on the triadic grid; use sample_path")
    xs, ys = grid

    def run(start, stop):
        return _batch_block(xs, ys, depth, seed, start, stop, grid_exponent)

    parts = map_blocks(run, n_paths, threads=threads, block=20000)
    return BatchResult(
        numerators=np.concatenate([p[0] for p in parts]),
        irregular_counts=np.concatenate([p[1] for p in parts]),
        length_violations=sum(p[2] for p in parts),
        double_blocks=sum(p[3] for p in parts),
        dead_ends=sum(p[4] for p in parts),
        contained=sum(p[5] for p in parts),
    )


# ---------------------------------------------------------------------------
# Probabilities and dimension
# ---------------------------------------------------------------------------

def _reduced_separation(aprime: float) -> float:
    if aprime <= 3**7:
        raise DomainError(f"log3(aprime) - 5 must exceed 2 (aprime > 2187), got {aprime}")
    return math.log(aprime, 3) - 5.0


def path_probability_bound(m: int, aprime: float) -> float:
    """Upper bound ``3^(-(1 - 1/A'') m + 1)`` on ``P(J_m = J)``."""
    ar = _reduced_separation(aprime)
    return 3.0 ** (-(1.0 - 1.0 / ar) * m + 1.0)


def dim_lower_bound(aprime: float) -> float:
    return 1.0 - 1.0 / _reduced_separation(aprime)


def level_distribution(family: IntervalFamily, m: int) -> dict:
    """Exact law of ``J_m`` as ``{numerator: Fraction}``, by propagating the
    probability of every reachable triadic interval level by level."""
    if m < 0:
        raise DomainError("level must be nonnegative")
    if m > 12:
        raise ResourceError("exact level distribution is limited to m <= 12")
    dist = {0: Fraction(1)}
    for k in range(m):
        nxt: dict = {}
        for a, p in dist.items():
            opts = allowed_thirds(k, a, family, classify_interval(k, a, family))
            share = p / len(opts)
            for t in opts:
                key = 3 * a + t
                nxt[key] = nxt.get(key, 0) + share
        dist = nxt
    return dist


@dataclass
class DimensionReport:
    lower_bound: float | None
    box_estimate: float
    depth: int
    surviving_counts: list

    def to_dict(self) -> dict:
        return {
            "lower_bound": self.lower_bound,
            "box_estimate": self.box_estimate,
            "depth": self.depth,
            "surviving_counts": list(self.surviving_counts),
        }

    def to_csv(self) -> str:
        rows = ["level,surviving_count"]
        rows += [f"{k},{c}" for k, c in enumerate(self.surviving_counts)]
        return "\n".join(rows) + "\n"


def surviving_count(family: IntervalFamily, level: int) -> int:
    """Closed level-k triadic intervals not contained in any family interval."""
    scale = 3**level
    removed = 0
    for x, y in family.intervals:
        j_min = math.floor(x * scale) + 1
        j_max = math.ceil(y * scale) - 2
        if j_max >= j_min:
            removed += j_max - j_min + 1
    return scale - removed


def box_dimension_estimate(family: IntervalFamily, depth: int) -> DimensionReport:
    """Least-squares slope of ``log3(count_k)`` against ``k`` over the last
    half of the levels ``0..depth``."""
    if depth < 1:
        raise DomainError("depth must be at least 1")
    if depth > MAX_BOX_DEPTH:
        raise ResourceError(f"box-counting depth is capped at {MAX_BOX_DEPTH}")
    counts = [surviving_count(family, k) for k in range(depth + 1)]
    levels = np.arange(depth // 2, depth + 1, dtype=float)
    logs = np.array([math.log(counts[int(k)], 3) for k in levels])
    slope = float(np.polyfit(levels, logs, 1)[0])
    lower = None
    if family.aprime is not None and family.aprime > 3**7:
        lower = dim_lower_bound(family.aprime)
    return DimensionReport(lower, slope, depth, counts)


# ---------------------------------------------------------------------------
# Search for intervals with two blockers
# ---------------------------------------------------------------------------

def _free_configuration(rng, level: int, numerator: int, n_intervals: int, fine: int):
    """Random intervals strung out from near the left edge of one triadic
    interval, on a grid ``fine`` levels below it."""
    h = 3**fine
    cursor = numerator * h - int(rng.uniform(0.0, 0.3) * h)
    ivs = []
    for _ in range(n_intervals):
        length = max(2, int(h * math.exp(rng.uniform(math.log(1 / 243), math.log(1 / 3)))))
        ivs.append((cursor, cursor + length))
        cursor += length + max(1, int(rng.uniform(0.0, 2.0) * h))
    return ivs


def _pinned_configuration(rng, level: int, numerator: int, fine: int):
    """Two intervals poking into opposite ends of one triadic interval, each
    overlapping it by between a ninth and a third of its length."""
    h = 3**fine
    base = numerator * h

    def pick(lo, hi):
        return int(h * rng.uniform(lo, hi))

    a, c = pick(1 / 9, 1 / 3), pick(1 / 9, 1 / 3)
    o1 = pick(1 / 9, min(a / h, 1 / 3))
    o2 = pick(1 / 9, min(c / h, 1 / 3))
    left = (base + o1 - a, base + o1)
    right = (base + h - o2, base + h - o2 + c)
    return [left, right]


def _triadic_neighbors(family: IntervalFamily, level: int, cap: int = 30):
    scale = 3**level
    seen = set()
    for x, y in family.intervals:
        lo = math.floor(x * scale)
        hi = min(math.ceil(y * scale), lo + cap)
        seen.update(j for j in range(lo, hi) if 0 <= j < scale)
    return sorted(seen)


def double_blocker_search(aprime: float, trials: int, seed: int, n_intervals: int = 2,
                          max_attempts: int | None = None):
    """Randomized hunt for a triadic interval with two blockers.

    Each trial draws a level ``k`` and a triadic ``J`` near the middle of
    (0, 1), then either two intervals pinned into opposite ends of ``J`` or a
    loose string of intervals near it. Families failing the separation check
    at ``aprime`` are discarded and do not count as trials; for the rest every
    triadic interval at levels ``k-1..k+1`` touching the family is examined.
    Returns ``(valid_families, witnesses)``; fewer than ``trials`` valid
    families means the attempt budget ran out.
    """
    rng = np.random.default_rng(seed)
    fine = 8
    max_attempts = max_attempts or 100 * trials
    valid, attempts, witnesses = 0, 0, []
    while valid < trials and attempts < max_attempts:
        attempts += 1
        level = int(rng.integers(4, 13))
        scale = 3**level
        numerator = int(rng.integers(scale // 4, 3 * scale // 4))
        if rng.random() < 0.5:
            raw = _pinned_configuration(rng, level, numerator, fine)
        else:
            raw = _free_configuration(rng, level, numerator, n_intervals, fine)
        denom = 3 ** (level + fine)
        try:
            fam = IntervalFamily(tuple((Fraction(x, denom), Fraction(y, denom)) for x, y in raw), aprime)
        except ConfigurationError:
            continue
        if not check_separation(fam).ok:
            continue
        valid += 1
        for k in (level - 1, level, level + 1):
            for j in _triadic_neighbors(fam, k):
                _, _, h, overlaps = _overlaps(fam, k, j)
                if any(ov >= h / 3 for _, ov in overlaps):
                    continue
                blockers = [i for i, ov in overlaps if ov >= h / 9]
                if len(blockers) > 1:
                    witnesses.append({"level": k, "numerator": j, "family": fam, "blockers": blockers})
    return valid, witnesses


# ---------------------------------------------------------------------------
# Experiment runner
# ---------------------------------------------------------------------------

def run_experiment(descriptor: dict, threads: int | None = None) -> dict:
    """Run the sampler pipeline described by
    ``{aprime, count, seed, depth, samples}`` (optional ``box_depth``, ``prob_level``)."""
    try:
        aprime = float(descriptor["aprime"])
        count = int(descriptor["count"])
        seed = int(descriptor["seed"])
        depth = int(descriptor["depth"])
        samples = int(descriptor["samples"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad experiment descriptor: {exc}") from None
    box_depth = int(descriptor.get("box_depth", min(depth, 12)))
    prob_level = int(descriptor.get("prob_level", min(depth, 8)))
    family = synth_family(aprime, count, seed)
    batch = sample_paths(family, depth, samples, seed, threads=threads)
    report = box_dimension_estimate(family, box_depth)
    dist = level_distribution(family, prob_level)
    return {
        "lower_bound": dim_lower_bound(aprime),
        "box_estimate": report.box_estimate,
        "max_path_prob": float(max(dist.values())),
        "path_prob_bound": path_probability_bound(prob_level, aprime),
        "invariant_violations": batch.violations,
        "irregular_levels_mean": float(batch.irregular_counts.mean()) if samples else 0.0,
        "surviving_counts": report.surviving_counts,
    }
