"""Openness, regularity, and inverse-Lipschitz checks on sampled set-valued maps.

All checks run on finite samples: a set-valued map is a finite list of
(x, y) pairs over a domain cloud and a codomain cloud. Closure membership is
replaced by "within closure_tol of the sampled set", the limit over
shrinking ball radii by a finite decreasing schedule, and the existential
"for some gamma > 0" of the modulus definitions by a halving schedule whose
verdict must repeat once before it is trusted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .extreal import INF, ExtReal, as_ext
from .spaces import Point, PointCloud, as_point

SUP_KINDS = ("sur", "popen", "lopen")
INF_KINDS = ("reg", "lip_inv", "subreg", "calm", "semireg", "incalm")
MODULUS_KINDS = SUP_KINDS + INF_KINDS

_PRODUCT_PAIRS = (
    frozenset({"sur", "reg"}),
    frozenset({"popen", "subreg"}),
    frozenset({"lopen", "semireg"}),
)
_COINCIDENT_PAIRS = (
    frozenset({"reg", "lip_inv"}),
    frozenset({"subreg", "calm"}),
    frozenset({"semireg", "incalm"}),
)

_WITNESS_CAP = 20


@dataclass(frozen=True)
class Metric:
    """Vectorized distance: pairwise(A, B) -> matrix of d(A_i, B_j)."""

    name: str
    pairwise: Callable[[np.ndarray, np.ndarray], np.ndarray]


def _euclidean_pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


EUCLIDEAN = Metric("euclidean", _euclidean_pairwise)


def graph_max_metric(split: int, alpha: float,
                     metric_x: Metric = EUCLIDEAN,
                     metric_y: Metric = EUCLIDEAN) -> Metric:
    """max(d(u, x), alpha * rho(v, y)) on concatenated (x, y) coordinates."""

    def pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return np.maximum(
            metric_x.pairwise(a[:, :split], b[:, :split]),
            alpha * metric_y.pairwise(a[:, split:], b[:, split:]),
        )

    return Metric(f"graph-max(alpha={alpha!r})", pairwise)


@dataclass(frozen=True)
class SampledMap:
    """A finite set-valued map: pairs (x, y) over explicit clouds."""

    domain: PointCloud
    codomain: PointCloud
    pairs: tuple[tuple[Point, Point], ...]
    metric_x: Metric = EUCLIDEAN
    metric_y: Metric = EUCLIDEAN

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ValueError("sampled map needs at least one pair")
        seen = set(self.pairs)
        if len(seen) != len(self.pairs):
            raise ValueError("duplicate graph pairs")
        dom = set(self.domain.points)
        cod = set(self.codomain.points)
        for x, y in self.pairs:
            if x not in dom:
                raise ValueError(f"pair domain point {x} not in domain cloud")
            if y not in cod:
                raise ValueError(f"pair codomain point {y} not in codomain cloud")

    @classmethod
    def from_function(cls, domain: PointCloud, fn: Callable[[Point], float | Sequence[float]],
                      metric_x: Metric = EUCLIDEAN, metric_y: Metric = EUCLIDEAN,
                      extra_codomain: Sequence[Point] = ()) -> "SampledMap":
        """Sample a single-valued function; the codomain cloud is its image."""
        pairs = tuple((x, as_point(fn(x))) for x in domain.points)
        image = []
        seen = set()
        for _, y in pairs:
            if y not in seen:
                seen.add(y)
                image.append(y)
        for y in extra_codomain:
            yp = as_point(y)
            if yp not in seen:
                seen.add(yp)
                image.append(yp)
        return cls(domain, PointCloud(tuple(image)), pairs, metric_x, metric_y)

    @classmethod
    def from_branches(cls, domain: PointCloud,
                      fns: Sequence[Callable[[Point], float | Sequence[float]]],
                      metric_x: Metric = EUCLIDEAN,
                      metric_y: Metric = EUCLIDEAN) -> "SampledMap":
        pairs = []
        image: list[Point] = []
        seen = set()
        pair_seen = set()
        for fn in fns:
            for x in domain.points:
                y = as_point(fn(x))
                if (x, y) not in pair_seen:
                    pair_seen.add((x, y))
                    pairs.append((x, y))
                if y not in seen:
                    seen.add(y)
                    image.append(y)
        return cls(domain, PointCloud(tuple(image)), tuple(pairs), metric_x, metric_y)

    def image_of(self, x: float | Sequence[float]) -> tuple[Point, ...]:
        p = as_point(x)
        return tuple(y for (u, y) in self.pairs if u == p)

    def preimage_of(self, y: float | Sequence[float]) -> tuple[Point, ...]:
        q = as_point(y)
        return tuple(x for (x, v) in self.pairs if v == q)

    def is_single_valued(self) -> bool:
        return len({x for x, _ in self.pairs}) == len(self.pairs)

    def inverse(self) -> "SampledMap":
        return SampledMap(
            domain=self.codomain,
            codomain=self.domain,
            pairs=tuple((y, x) for (x, y) in self.pairs),
            metric_x=self.metric_y,
            metric_y=self.metric_x,
        )


class MapGeometry:
    """Distance tables shared by every check on one sampled map."""

    def __init__(self, mapping: SampledMap):
        self.mapping = mapping
        self.X = np.asarray(mapping.domain.points, dtype=float)
        self.Y = np.asarray(mapping.codomain.points, dtype=float)
        self.DX = mapping.metric_x.pairwise(self.X, self.X)
        self.DY = mapping.metric_y.pairwise(self.Y, self.Y)
        x_index = {p: i for i, p in enumerate(mapping.domain.points)}
        y_index = {p: i for i, p in enumerate(mapping.codomain.points)}
        self.x_index = x_index
        self.y_index = y_index
        self.pair_xi = np.array([x_index[x] for x, _ in mapping.pairs], dtype=int)
        self.pair_yi = np.array([y_index[y] for _, y in mapping.pairs], dtype=int)
        n_x, n_y = len(self.X), len(self.Y)
        images: list[list[int]] = [[] for _ in range(n_x)]
        for xi, yi in zip(self.pair_xi, self.pair_yi):
            images[xi].append(yi)
        self.images = [np.array(ix, dtype=int) for ix in images]
        # DYG[u, v] = distance from codomain point v to the image of u.
        self.DYG = np.full((n_x, n_y), np.inf)
        for u, ix in enumerate(self.images):
            if len(ix):
                self.DYG[u] = self.DY[ix].min(axis=0)
        self.step_x = _min_positive(self.DX)
        self.step_y = _min_positive(self.DY)
        self.diam_x = _max_finite(self.DX)
        self.diam_y = _max_finite(self.DY)

    def cover_radius(self, tol: float) -> np.ndarray:
        """S[v, x] = least radius whose open domain ball covers v within tol.

        Precisely min{DX[u, x] : dist(v, image(u)) <= tol}; +inf when no
        sampled image approaches v. An open ball of radius t covers v exactly
        when t > S[v, x]; a closed ball when t >= S[v, x].
        """
        n_x, n_y = self.DYG.shape
        out = np.full((n_y, n_x), np.inf)
        for v in range(n_y):
            mask = self.DYG[:, v] <= tol
            if mask.any():
                out[v] = self.DX[mask].min(axis=0)
        return out

    def preimage_distance(self, eps: float) -> np.ndarray:
        """P[x, v] = dist(x, {u : image(u) meets the open ball B(v, eps)})."""
        n_x, n_y = self.DYG.shape
        out = np.full((n_x, n_y), np.inf)
        for v in range(n_y):
            mask = self.DYG[:, v] < eps
            if mask.any():
                out[:, v] = self.DX[:, mask].min(axis=1)
        return out

    def exact_preimage_distance(self) -> np.ndarray:
        """P0[x, v] = dist(x, G^{-1}(v)) with exact membership."""
        n_x, n_y = self.DYG.shape
        out = np.full((n_x, n_y), np.inf)
        for xi, yi in zip(self.pair_xi, self.pair_yi):
            col = self.DX[:, xi]
            np.minimum(out[:, yi], col, out=out[:, yi])
        return out


def _min_positive(d: np.ndarray) -> float:
    vals = d[np.isfinite(d) & (d > 0.0)]
    return float(vals.min()) if vals.size else 1.0

def _max_finite(d: np.ndarray) -> float:
    vals = d[np.isfinite(d)]
    return float(vals.max()) if vals.size else 1.0


@dataclass(frozen=True)
class TGrid:
    """Geometric radius grid t_k = t_min * ratio**k, k = 0, 1, ..."""

    t_min: float
    per_decade: int = 20

    @property
    def ratio(self) -> float:
        return 10.0 ** (1.0 / self.per_decade)

    def first_reaching(self, rho: np.ndarray, constant: float,
                       closed: bool = False) -> np.ndarray:
        """Smallest grid t with rho < constant * t (<= when closed), per entry.

        The initial guess comes from logarithms; correction passes re-test the
        exact float predicate so the returned radius is the true minimizer.
        """
        rho = np.asarray(rho, dtype=float)
        out = np.full(rho.shape, np.inf)
        finite = np.isfinite(rho)
        if not finite.any():
            return out
        rf = np.maximum(rho[finite], 0.0)
        ratio = self.ratio
        log_ratio = math.log(ratio)
        with np.errstate(divide="ignore"):
            guess = np.log(np.maximum(rf / (constant * self.t_min), 1e-300)) / log_ratio
        k = np.maximum(np.floor(guess).astype(np.int64), 0)

        def grid(kk: np.ndarray) -> np.ndarray:
            return self.t_min * np.power(ratio, kk.astype(float))

        def hit(tt: np.ndarray) -> np.ndarray:
            lhs = constant * tt
            return rf <= lhs if closed else rf < lhs

        t = grid(k)
        for _ in range(6):
            bad = ~hit(t)
            if not bad.any():
                break
            k = k + bad.astype(np.int64)
            t = grid(k)
        for _ in range(6):
            prev = grid(np.maximum(k - 1, 0))
            down = (k > 0) & hit(prev)
            if not down.any():
                break
            k = k - down.astype(np.int64)
            t = grid(k)
        out[finite] = t
        return out


@dataclass(frozen=True)
class OpennessWitness:
    x: Point
    y: Point
    t: float
    target: Point
    gap: float

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.t, self.target, self.gap)


@dataclass(frozen=True)
class EstimateWitness:
    x: Point
    y: Point
    value: float
    bound: float

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.value, self.bound)


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    checked: int
    violation_count: int
    witnesses: tuple
    vacuous: bool
    stabilized: bool | None = None  # limit-schedule stabilization, when relevant


@dataclass(frozen=True)
class RegularityInstance:
    """A property-check instance: map, regions, reach function, constant."""

    mapping: SampledMap
    region_x: tuple[Point, ...]
    region_y: tuple[Point, ...]
    gamma: object  # scalar, mapping point -> value, or callable point -> value
    constant: float
    eps_schedule: tuple[float, ...] = ()
    closure_tol: float | None = None
    t_per_decade: int = 20

    def __post_init__(self) -> None:
        if not self.constant > 0.0:
            raise ValueError("constant must be positive")
        if self.eps_schedule:
            for a, b in zip(self.eps_schedule, self.eps_schedule[1:]):
                if not (a > b > 0.0):
                    raise ValueError("eps_schedule must be strictly decreasing and positive")
        if self.closure_tol is not None and self.closure_tol < 0.0:
            raise ValueError("closure_tol must be nonnegative")


def _gamma_array(gamma: object, domain: PointCloud) -> np.ndarray:
    if callable(gamma):
        vals = [float(as_ext(gamma(p))) for p in domain.points]
    elif isinstance(gamma, Mapping):
        try:
            vals = [float(as_ext(gamma[p])) for p in domain.points]
        except KeyError as exc:
            raise KeyError(f"gamma table missing domain point {exc}") from None
    else:
        vals = [float(as_ext(gamma))] * len(domain)
    arr = np.array(vals, dtype=float)
    if (arr < 0.0).any():
        raise ValueError("gamma must be nonnegative")
    return arr


def _region_mask(points: Sequence[Point], cloud: PointCloud) -> np.ndarray:
    index = {p: i for i, p in enumerate(cloud.points)}
    mask = np.zeros(len(cloud), dtype=bool)
    for p in points:
        q = as_point(p)
        if q not in index:
            raise KeyError(f"region point {q} not in cloud")
        mask[index[q]] = True
    return mask


@dataclass
class _Prepared:
    geom: MapGeometry
    u_mask: np.ndarray
    v_mask: np.ndarray
    gam: np.ndarray
    tol: float
    tgrid: TGrid
    eps_schedule: tuple[float, ...]

    @property
    def mapping(self) -> SampledMap:
        return self.geom.mapping


def _prepare(inst: RegularityInstance, geom: MapGeometry | None = None) -> _Prepared:
    g = geom or MapGeometry(inst.mapping)
    tol = inst.closure_tol if inst.closure_tol is not None else 2.0 * g.step_x
    eps = inst.eps_schedule or _default_eps_schedule(g)
    gam = _gamma_array(inst.gamma, inst.mapping.domain)
    if not (gam[_region_mask(inst.region_x, inst.mapping.domain)] > 0.0).any():
        raise ValueError("gamma vanishes identically on the domain region")
    return _Prepared(
        geom=g,
        u_mask=_region_mask(inst.region_x, inst.mapping.domain),
        v_mask=_region_mask(inst.region_y, inst.mapping.codomain),
        gam=gam,
        tol=tol,
        tgrid=TGrid(g.step_x, inst.t_per_decade),
        eps_schedule=tuple(eps),
    )


def _default_eps_schedule(geom: MapGeometry) -> tuple[float, ...]:
    # The schedule must not drop below the coarser grid scale: a merged
    # multi-branch codomain can have pairwise gaps far below the domain
    # resolution, and an eps under that gap hides legitimate preimages.
    base = max(geom.step_x, geom.step_y)
    return (4.0 * base, 2.0 * base, base)


def _openness_scan(prep: _Prepared, constant: float, closed: bool = False
                   ) -> tuple[int, list[OpennessWitness], bool]:
    """Shared core of the ball-inclusion scans over (x, y, t, target)."""
    geom = prep.geom
    cover = geom.cover_radius(prep.tol)
    checked = 0
    nonvacuous = False
    witnesses: list[OpennessWitness] = []
    for xi, yi in zip(geom.pair_xi, geom.pair_yi):
        if not prep.u_mask[xi]:
            continue
        checked += 1
        gamma_x = prep.gam[xi]
        if not gamma_x > 0.0:
            continue
        t_star = prep.tgrid.first_reaching(geom.DY[yi], constant, closed=closed)
        in_range = t_star < gamma_x
        window = in_range & prep.v_mask
        if window.any():
            nonvacuous = True
        if closed:
            viol = window & (t_star < cover[:, xi])
        else:
            viol = window & (t_star <= cover[:, xi])
        for v in np.nonzero(viol)[0]:
            witnesses.append(_openness_witness(geom, xi, yi, int(v),
                                               float(t_star[v]), closed))
    return checked, witnesses, not nonvacuous


def _openness_witness(geom: MapGeometry, xi: int, yi: int, v: int,
                      t: float, closed: bool) -> OpennessWitness:
    if closed:
        ball = geom.DX[:, xi] <= t
    else:
        ball = geom.DX[:, xi] < t
    gap = float(geom.DYG[ball, v].min()) if ball.any() else math.inf
    return OpennessWitness(
        x=geom.mapping.domain.points[xi],
        y=geom.mapping.codomain.points[yi],
        t=t,
        target=geom.mapping.codomain.points[v],
        gap=gap,
    )


def check_openness(inst: RegularityInstance, geom: MapGeometry | None = None) -> CheckReport:
    """Ball-inclusion openness on the sampled regions.

    For every graph pair (x, y) with x in the domain region and every radius
    t on the geometric grid below gamma(x), each codomain-region point within
    constant * t of y must lie within closure_tol of the image of the open
    domain ball around x of radius t.
    """
    prep = _prepare(inst, geom)
    checked, witnesses, vacuous = _openness_scan(prep, inst.constant, closed=False)
    return CheckReport(
        name="openness",
        passed=not witnesses,
        checked=checked,
        violation_count=len(witnesses),
        witnesses=tuple(w.as_tuple() for w in witnesses[:_WITNESS_CAP]),
        vacuous=vacuous,
    )


def closed_ball_openness(inst: RegularityInstance, geom: MapGeometry | None = None) -> CheckReport:
    """Openness variant with closed target and closed source balls."""
    prep = _prepare(inst, geom)
    checked, witnesses, vacuous = _openness_scan(prep, inst.constant, closed=True)
    return CheckReport(
        name="openness-closed",
        passed=not witnesses,
        checked=checked,
        violation_count=len(witnesses),
        witnesses=tuple(w.as_tuple() for w in witnesses[:_WITNESS_CAP]),
        vacuous=vacuous,
    )


def _limit_surrogate(prep: _Prepared) -> tuple[np.ndarray, bool]:
    """Distance-to-preimage limit: final schedule value plus stabilization flag."""
    last = prep.geom.preimage_distance(prep.eps_schedule[-1])
    if len(prep.eps_schedule) >= 2:
        prev = prep.geom.preimage_distance(prep.eps_schedule[-2])
        both = np.isfinite(last) & np.isfinite(prev)
        stabilized = bool(np.all(np.abs(last[both] - prev[both]) <= prep.tol)) and bool(
            np.array_equal(np.isfinite(last), np.isfinite(prev)))
    else:
        stabilized = True
    return last, stabilized


def check_regularity_estimate(inst: RegularityInstance,
                              geom: MapGeometry | None = None) -> CheckReport:
    """Distance estimate dist(x, G^{-1}(ball(y, eps))) <= mu * dist(y, G(x)).

    Evaluated on region pairs with mu * dist(y, G(x)) < gamma(x); the limit
    over eps is the last value of the decreasing schedule, compared within
    closure_tol.
    """
    prep = _prepare(inst, geom)
    mu = inst.constant
    surrogate, stabilized = _limit_surrogate(prep)
    dyg = prep.geom.DYG
    cond = (prep.u_mask[:, None] & prep.v_mask[None, :]
            & (mu * dyg < prep.gam[:, None]))
    bound = mu * dyg + prep.tol
    with np.errstate(invalid="ignore"):
        bad = cond & ~(surrogate <= bound)
    witnesses = _estimate_witnesses(prep, np.argwhere(bad), surrogate, bound)
    return CheckReport(
        name="regularity-estimate",
        passed=not witnesses,
        checked=int(cond.sum()),
        violation_count=len(witnesses),
        witnesses=tuple(w.as_tuple() for w in witnesses[:_WITNESS_CAP]),
        vacuous=not bool(cond.any()),
        stabilized=stabilized,
    )


def _estimate_witnesses(prep: _Prepared, idx: np.ndarray, value: np.ndarray,
                        bound: np.ndarray) -> list[EstimateWitness]:
    out = []
    for xi, vi in idx:
        out.append(EstimateWitness(
            x=prep.mapping.domain.points[int(xi)],
            y=prep.mapping.codomain.points[int(vi)],
            value=float(value[xi, vi]),
            bound=float(bound[xi, vi]),
        ))
    return out


def check_inverse_lipschitz(inst: RegularityInstance,
                            geom: MapGeometry | None = None) -> CheckReport:
    """Graph-to-nearby-target estimate dist(x, G^{-1}(ball(y', eps))) <= mu * rho(y, y').

    Quantified over graph pairs (x, y) with x in the domain region and
    codomain-region points y' with mu * rho(y, y') < gamma(x).
    """
    prep = _prepare(inst, geom)
    mu = inst.constant
    surrogate, stabilized = _limit_surrogate(prep)
    geom_ = prep.geom
    checked = 0
    witnesses: list[EstimateWitness] = []
    vacuous = True
    for xi, yi in zip(geom_.pair_xi, geom_.pair_yi):
        if not prep.u_mask[xi]:
            continue
        rho = geom_.DY[yi]
        cond = prep.v_mask & (mu * rho < prep.gam[xi])
        if cond.any():
            vacuous = False
        checked += int(cond.sum())
        bound = mu * rho + prep.tol
        with np.errstate(invalid="ignore"):
            bad = cond & ~(surrogate[xi] <= bound)
        for vi in np.nonzero(bad)[0]:
            witnesses.append(EstimateWitness(
                x=geom_.mapping.domain.points[int(xi)],
                y=geom_.mapping.codomain.points[int(vi)],
                value=float(surrogate[xi, vi]),
                bound=float(bound[vi]),
            ))
    return CheckReport(
        name="inverse-lipschitz",
        passed=not witnesses,
        checked=checked,
        violation_count=len(witnesses),
        witnesses=tuple(w.as_tuple() for w in witnesses[:_WITNESS_CAP]),
        vacuous=vacuous,
        stabilized=stabilized,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    openness: CheckReport
    regularity: CheckReport
    inverse: CheckReport
    agree: bool
    constant: float


def equivalence_suite(inst: RegularityInstance) -> EquivalenceReport:
    """Run the three properties in the loop openness(c) / estimates(1/c)."""
    geom = MapGeometry(inst.mapping)
    gam = _gamma_array(inst.gamma, inst.mapping.domain)
    region = _region_mask(inst.region_x, inst.mapping.domain)
    if not (gam[region] > 0.0).all():
        raise ValueError("equivalence loop requires gamma > 0 on the domain region")
    o = check_openness(inst, geom)
    dual = replace(inst, constant=1.0 / inst.constant)
    r = check_regularity_estimate(dual, geom)
    l = check_inverse_lipschitz(dual, geom)
    verdicts = {o.passed, r.passed, l.passed}
    return EquivalenceReport(o, r, l, agree=len(verdicts) == 1, constant=inst.constant)


# --- modulus estimation ----------------------------------------------------


@dataclass(frozen=True)
class ModulusSearchConfig:
    gamma0: float | None = None          # default: the domain diameter
    gamma_floor_steps: float = 4.0       # floor = steps * grid step
    bisect_iters: int = 40
    bracket: tuple[float, float] | None = None
    closure_tol: float | None = None
    t_per_decade: int = 20
    eps_schedule: tuple[float, ...] = ()


@dataclass(frozen=True)
class ModulusReport:
    kind: str
    lower: float
    upper: ExtReal
    estimate: float
    grid_resolution: float
    stabilized_gamma: float | None
    resolution_limited: bool
    witness_ok: tuple | None
    witness_fail: tuple | None

    def __post_init__(self) -> None:
        if self.upper < self.lower:
            raise ValueError("modulus bracket must satisfy lower <= upper")


class _ModulusEngine:
    """Property evaluation for the nine moduli at a fixed reference pair."""

    def __init__(self, mapping: SampledMap, ref: tuple, cfg: ModulusSearchConfig):
        self.mapping = mapping
        self.geom = MapGeometry(mapping)
        rx, ry = as_point(ref[0]), as_point(ref[1])
        if (rx, ry) not in set(mapping.pairs):
            raise ValueError(f"reference pair ({rx}, {ry}) must lie on the graph")
        self.rx = self.geom.x_index[rx]
        self.ry = self.geom.y_index[ry]
        self.cfg = cfg
        self.tol = cfg.closure_tol if cfg.closure_tol is not None else 2.0 * self.geom.step_x
        self.tgrid = TGrid(self.geom.step_x, cfg.t_per_decade)
        self.cover = self.geom.cover_radius(self.tol)
        eps = cfg.eps_schedule or _default_eps_schedule(self.geom)
        self.surrogate = self.geom.preimage_distance(eps[-1])
        self.gamma0 = cfg.gamma0 if cfg.gamma0 is not None else self.geom.diam_x
        self.gamma_floor = cfg.gamma_floor_steps * self.geom.step_x
        self._tstar_cache: dict[tuple[str, float], np.ndarray] = {}

    def _tstar_pairs(self, constant: float) -> np.ndarray:
        """Per graph pair, smallest grid t with DY[y] < constant * t."""
        key = ("pairs", constant)
        if key not in self._tstar_cache:
            rows = [self.tgrid.first_reaching(self.geom.DY[yi], constant)
                    for yi in self.geom.pair_yi]
            self._tstar_cache[key] = np.vstack(rows)
        return self._tstar_cache[key]

    def _tstar_popen(self, constant: float) -> np.ndarray:
        key = ("popen", constant)
        if key not in self._tstar_cache:
            self._tstar_cache[key] = self.tgrid.first_reaching(
                self.geom.DYG[:, self.ry], constant)
        return self._tstar_cache[key]

    def gamma_schedule(self) -> list[float]:
        out = []
        g = self.gamma0
        while g >= self.gamma_floor and len(out) < 60:
            out.append(g)
            g *= 0.5
        return out or [self.gamma0]

    def holds_at(self, kind: str, constant: float, gamma: float) -> tuple[bool, tuple | None]:
        geom = self.geom
        if kind == "sur":
            tstar = self._tstar_pairs(constant)
            near_ref = geom.DY[self.ry] < gamma
            for pi, (xi, yi) in enumerate(zip(geom.pair_xi, geom.pair_yi)):
                if not geom.DX[self.rx, xi] < gamma:
                    continue
                t_star = tstar[pi]
                viol = near_ref & (t_star < gamma) & (t_star <= self.cover[:, xi])
                if viol.any():
                    v = int(np.nonzero(viol)[0][0])
                    return False, _openness_witness(geom, xi, yi, v, float(t_star[v]), False).as_tuple()
            return True, None
        if kind == "popen":
            t_all = self._tstar_popen(constant)
            xs = np.nonzero(geom.DX[self.rx] < gamma)[0]
            t_star = t_all[xs]
            viol = (t_star < gamma) & (t_star <= self.cover[self.ry, xs])
            if viol.any():
                i = int(np.nonzero(viol)[0][0])
                xi = int(xs[i])
                return False, _openness_witness(geom, xi, self.ry, self.ry, float(t_star[i]), False).as_tuple()
            return True, None
        if kind == "lopen":
            for yi in self.geom.images[self.rx]:
                t_star = self.tgrid.first_reaching(geom.DY[yi], constant)
                viol = (geom.DY[self.ry] < gamma) & (t_star < gamma) & (t_star <= self.cover[:, self.rx])
                if viol.any():
                    v = int(np.nonzero(viol)[0][0])
                    return False, _openness_witness(geom, self.rx, int(yi), v, float(t_star[v]), False).as_tuple()
            return True, None
        if kind in ("reg", "subreg"):
            mu = constant
            x_near = geom.DX[self.rx] < gamma
            if kind == "reg":
                y_near = geom.DY[self.ry] < gamma
            else:
                y_near = np.zeros(len(geom.Y), dtype=bool)
                y_near[self.ry] = True
            cond = x_near[:, None] & y_near[None, :] & (mu * geom.DYG < gamma)
            bound = mu * geom.DYG + self.tol
            with np.errstate(invalid="ignore"):
                bad = cond & ~(self.surrogate <= bound)
            if bad.any():
                xi, vi = map(int, np.argwhere(bad)[0])
                return False, (self.mapping.domain.points[xi],
                               self.mapping.codomain.points[vi],
                               float(self.surrogate[xi, vi]), float(bound[xi, vi]))
            return True, None
        if kind == "semireg":
            mu = constant
            row = geom.DYG[self.rx]
            cond = (geom.DY[self.ry] < gamma) & (mu * row < gamma)
            bound = mu * row + self.tol
            with np.errstate(invalid="ignore"):
                bad = cond & ~(self.surrogate[self.rx] <= bound)
            if bad.any():
                vi = int(np.nonzero(bad)[0][0])
                return False, (self.mapping.domain.points[self.rx],
                               self.mapping.codomain.points[vi],
                               float(self.surrogate[self.rx, vi]), float(bound[vi]))
            return True, None
        if kind in ("lip_inv", "calm"):
            ell = constant
            for xi, yi in zip(geom.pair_xi, geom.pair_yi):
                if not geom.DX[self.rx, xi] < gamma:
                    continue
                rho = geom.DY[yi]
                if kind == "lip_inv":
                    targets = geom.DY[self.ry] < gamma
                else:
                    targets = np.zeros(len(geom.Y), dtype=bool)
                    targets[self.ry] = True
                cond = targets & (ell * rho < gamma)
                bound = ell * rho + self.tol
                with np.errstate(invalid="ignore"):
                    bad = cond & ~(self.surrogate[xi] <= bound)
                if bad.any():
                    vi = int(np.nonzero(bad)[0][0])
                    return False, (self.mapping.domain.points[int(xi)],
                                   self.mapping.codomain.points[vi],
                                   float(self.surrogate[xi, vi]), float(bound[vi]))
            return True, None
        if kind == "incalm":
            ell = constant
            for yi in self.geom.images[self.rx]:
                rho = geom.DY[int(yi)]
                cond = (geom.DY[self.ry] < gamma) & (ell * rho < gamma)
                bound = ell * rho + self.tol
                with np.errstate(invalid="ignore"):
                    bad = cond & ~(self.surrogate[self.rx] <= bound)
                if bad.any():
                    vi = int(np.nonzero(bad)[0][0])
                    return False, (self.mapping.domain.points[self.rx],
                                   self.mapping.codomain.points[vi],
                                   float(self.surrogate[self.rx, vi]), float(bound[vi]))
            return True, None
        raise ValueError(f"unknown modulus kind {kind!r}")

    def verdict(self, kind: str, constant: float) -> tuple[bool, float | None, bool, tuple | None]:
        """Scan the gamma schedule; trust the first repeated verdict.

        Returns (holds, stabilized_gamma, resolution_limited, witness).
        """
        schedule = self.gamma_schedule()
        prev: bool | None = None
        prev_gamma = None
        last = None
        last_witness = None
        for g in schedule:
            ok, witness = self.holds_at(kind, constant, g)
            if prev is not None and ok == prev:
                return ok, g, False, witness if not ok else None
            prev, prev_gamma = ok, g
            last, last_witness = ok, witness
        return bool(last), prev_gamma, True, last_witness if not last else None


def check_modulus_property(mapping: SampledMap, ref: tuple, kind: str, constant: float,
                           gamma: float, cfg: ModulusSearchConfig | None = None
                           ) -> CheckReport:
    """Re-checkable single-gamma evaluation of a modulus-defining property."""
    if kind not in MODULUS_KINDS:
        raise ValueError(f"unknown modulus kind {kind!r}")
    engine = _ModulusEngine(mapping, ref, cfg or ModulusSearchConfig())
    ok, witness = engine.holds_at(kind, constant, gamma)
    return CheckReport(
        name=f"modulus-property({kind})",
        passed=ok,
        checked=1,
        violation_count=0 if ok else 1,
        witnesses=() if ok else (witness,),
        vacuous=False,
    )


def estimate_modulus(mapping: SampledMap, ref: tuple, kind: str,
                     cfg: ModulusSearchConfig | None = None) -> ModulusReport:
    """Bracket one of the nine moduli by bisection over the constant.

    For rate-type kinds (sur, popen, lopen) the modulus is the supremum of
    passing constants; for bound-type kinds it is the infimum. The bracket
    endpoints always carry verdicts actually evaluated on the sample.
    """
    if kind not in MODULUS_KINDS:
        raise ValueError(f"unknown modulus kind {kind!r}")
    cfg = cfg or ModulusSearchConfig()
    engine = _ModulusEngine(mapping, ref, cfg)
    lo, hi = cfg.bracket if cfg.bracket is not None else (
        min(engine.geom.step_x, engine.geom.step_y),
        (engine.geom.diam_x + engine.geom.diam_y) / min(engine.geom.step_x,
                                                        engine.geom.step_y),
    )
    if not 0.0 < lo < hi:
        raise ValueError("bracket must satisfy 0 < lo < hi")
    sup_kind = kind in SUP_KINDS

    def probe(c: float):
        return engine.verdict(kind, c)

    ok_lo, g_lo, rl_lo, w_lo = probe(lo)
    ok_hi, g_hi, rl_hi, w_hi = probe(hi)
    resolution_limited = rl_lo or rl_hi
    stabilized_gamma = g_lo
    witness_ok: tuple | None = None
    witness_fail: tuple | None = None

    if sup_kind:
        if not ok_lo:
            return _report(kind, 0.0, as_ext(lo), engine, g_lo, resolution_limited,
                           None, (lo, g_lo, w_lo))
        if ok_hi:
            return _report(kind, hi, INF, engine, g_hi, resolution_limited,
                           (hi, g_hi), None)
        c_pass, c_fail = lo, hi
        witness_ok = (lo, g_lo)
        witness_fail = (hi, g_hi, w_hi)
    else:
        if ok_lo:
            return _report(kind, 0.0, as_ext(lo), engine, g_lo, resolution_limited,
                           (lo, g_lo), None)
        if not ok_hi:
            return _report(kind, hi, INF, engine, g_hi, resolution_limited,
                           None, (hi, g_hi, w_hi))
        c_fail, c_pass = lo, hi
        witness_ok = (hi, g_hi)
        witness_fail = (lo, g_lo, w_lo)

    for _ in range(cfg.bisect_iters):
        mid = 0.5 * (c_pass + c_fail)
        if mid == c_pass or mid == c_fail:
            break
        ok, g_mid, rl_mid, w_mid = probe(mid)
        resolution_limited = resolution_limited or rl_mid
        if ok:
            c_pass, witness_ok = mid, (mid, g_mid)
        else:
            c_fail, witness_fail = mid, (mid, g_mid, w_mid)
        stabilized_gamma = g_mid

    if sup_kind:
        lower, upper = c_pass, as_ext(c_fail)
        estimate = c_pass
    else:
        lower, upper = c_fail, as_ext(c_pass)
        estimate = c_pass
    return _report(kind, lower, upper, engine, stabilized_gamma,
                   resolution_limited, witness_ok, witness_fail, estimate)


def _report(kind: str, lower: float, upper: ExtReal, engine: _ModulusEngine,
            stabilized_gamma: float | None, resolution_limited: bool,
            witness_ok, witness_fail, estimate: float | None = None) -> ModulusReport:
    if estimate is None:
        estimate = lower if kind in SUP_KINDS else float(upper)
    return ModulusReport(
        kind=kind,
        lower=lower,
        upper=upper,
        estimate=estimate,
        grid_resolution=engine.geom.step_x,
        stabilized_gamma=stabilized_gamma,
        resolution_limited=resolution_limited,
        witness_ok=witness_ok,
        witness_fail=witness_fail,
    )


@dataclass(frozen=True)
class ProductLawReport:
    kinds: tuple[str, str]
    relation: str  # "product" or "coincide"
    interval_low: float
    interval_high: ExtReal
    tol: float
    verdict: bool


def verify_product_laws(r1: ModulusReport, r2: ModulusReport,
                        tol: float = 0.05) -> ProductLawReport:
    """Check the bracket-level relation between a pair of modulus reports.

    Paired rate/bound kinds must multiply to 1 (with 0 * inf = 1); coincident
    kinds must produce overlapping brackets, both up to tol.
    """
    kinds = frozenset({r1.kind, r2.kind})
    if kinds in _PRODUCT_PAIRS:
        low = as_ext(r1.lower) * as_ext(r2.lower)
        high = r1.upper * r2.upper
        verdict = (low <= 1.0 + tol) and (high >= 1.0 - tol)
        return ProductLawReport((r1.kind, r2.kind), "product", float(low), high, tol, verdict)
    if kinds in _COINCIDENT_PAIRS or r1.kind == r2.kind:
        low = max(r1.lower, r2.lower)
        high = r1.upper if r1.upper <= r2.upper else r2.upper
        verdict = low <= float(high) + tol
        return ProductLawReport((r1.kind, r2.kind), "coincide", low, high, tol, verdict)
    raise ValueError(f"kinds {sorted(kinds)} are neither paired nor coincident")


def project_graph(inst: RegularityInstance, alpha: float) -> RegularityInstance:
    """Rebuild the instance over the graph cloud with the max-product metric.

    The projected map sends a graph point (x, y) to y; the domain metric is
    max(d, alpha * rho) with 0 < alpha < 1 / constant, and each graph point
    inherits gamma from its first coordinate. Openness verdicts transfer.
    """
    if not 0.0 < alpha < 1.0 / inst.constant:
        raise ValueError("alpha must lie in (0, 1 / constant)")
    mapping = inst.mapping
    dim_x = mapping.domain.dimension
    graph_points = tuple(x + y for (x, y) in mapping.pairs)
    if len(set(graph_points)) != len(graph_points):
        raise ValueError("graph points must be distinct after concatenation")
    graph_cloud = PointCloud(graph_points)
    projected = SampledMap(
        domain=graph_cloud,
        codomain=mapping.codomain,
        pairs=tuple((x + y, y) for (x, y) in mapping.pairs),
        metric_x=graph_max_metric(dim_x, alpha, mapping.metric_x, mapping.metric_y),
        metric_y=mapping.metric_y,
    )
    region = set(as_point(p) for p in inst.region_x)
    region_graph = tuple(g for g, (x, _) in zip(graph_points, mapping.pairs)
                         if x in region)
    gam = _gamma_array(inst.gamma, mapping.domain)
    x_index = {p: i for i, p in enumerate(mapping.domain.points)}
    gamma_table = {g: gam[x_index[x]] for g, (x, _) in zip(graph_points, mapping.pairs)}
    return RegularityInstance(
        mapping=projected,
        region_x=region_graph,
        region_y=inst.region_y,
        gamma=gamma_table,
        constant=inst.constant,
        eps_schedule=inst.eps_schedule,
        closure_tol=inst.closure_tol,
        t_per_decade=inst.t_per_decade,
    )


@dataclass(frozen=True)
class SequenceCharReport:
    targets: tuple[Point, ...]
    verdict: bool
    failed_step: int | None
    bound: float
    estimate_verdict: bool
    agree: bool


def sequence_characterization(mapping: SampledMap, x: float | Sequence[float],
                              y: float | Sequence[float], kappa: float, eps: float,
                              cap: int = 10, closure_tol: float | None = None
                              ) -> SequenceCharReport:
    """Search approach targets y_k -> y whose exact preimages stay near x.

    Step k needs a codomain point within eps / k of y whose exact preimage
    lies within kappa * (dist(y, G(x)) + eps) of x. The verdict is compared
    with the distance-estimate inequality at (x, y).
    """
    if kappa <= 0.0 or eps <= 0.0:
        raise ValueError("kappa and eps must be positive")
    geom = MapGeometry(mapping)
    xi = geom.x_index[as_point(x)]
    yi = geom.y_index[as_point(y)]
    tol = closure_tol if closure_tol is not None else 2.0 * geom.step_x
    d0 = float(geom.DYG[xi, yi])
    bound = kappa * (d0 + eps)
    pre0 = geom.exact_preimage_distance()
    targets: list[Point] = []
    failed: int | None = None
    for k in range(1, cap + 1):
        radius = eps / k
        cand = (geom.DY[yi] < radius) & (pre0[xi] <= bound)
        if not cand.any():
            failed = k
            break
        order = np.lexsort((pre0[xi], geom.DY[yi], ~cand))
        best = int(order[0])
        targets.append(mapping.codomain.points[best])
    verdict = failed is None

    schedule = _default_eps_schedule(geom)
    surrogate = geom.preimage_distance(schedule[-1])
    estimate_verdict = bool(surrogate[xi, yi] <= kappa * d0 + tol)
    return SequenceCharReport(
        targets=tuple(targets),
        verdict=verdict,
        failed_step=failed,
        bound=bound,
        estimate_verdict=estimate_verdict,
        agree=verdict == estimate_verdict,
    )
