"""Bracket constructions, covering counts and chaining projections.

A bracket for a class member f is a pair of Lipschitz functions l <= f <= u
with an L^s(mu) gap below a target eps and a smoothness norm (sup + Lipschitz
seminorm) below a budget.  Constructions are provided for interval indicator,
rectangle indicator and ellipsoid indicator classes; counts are reported as
constructive upper bounds, never claimed minimal.

Collections are lazy: a scheme knows its cell count and builds the bracket of
any given member on demand, so per-member invariants can be checked at levels
where materializing the full covering is impossible.

The dyadic machinery on top (levels eps = 2^-q, time projections tau_q) feeds
the chaining diagnostics: project a member and a time point to level q and
compare the empirical fields before and after.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .empirical import FunctionClass

__all__ = [
    "Measure",
    "PsiBudget",
    "Bracket",
    "EntropyProfile",
    "EntropyVerdict",
    "bracket_scheme",
    "build_brackets",
    "bracketing_number",
    "entropy_condition_check",
    "tau_q",
    "tau_q_prime",
    "BracketLadder",
    "ChainProjection",
]

_MATERIALIZE_LIMIT = 200_000


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Measure:
    """Integration backend: uniform on a box, a bounded density, or a sample.

    ``box`` is (2, d) lo/hi.  ``density`` must be normalized on the box and
    bounded by ``density_bound``.  Empirical measures integrate by averaging
    over the stored sample.
    """

    kind: str
    box: np.ndarray | None = None
    density: object = None
    density_bound: float | None = None
    sample: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("uniform", "density_box", "empirical"):
            raise ValidationError(f"unknown measure kind {self.kind!r}")
        if self.kind in ("uniform", "density_box"):
            if self.box is None:
                raise ValidationError(f"{self.kind} measure needs a box")
            box = np.asarray(self.box, dtype=np.float64)
            if box.ndim == 1:
                box = box[:, None]
            if box.shape[0] != 2 or (box[1] <= box[0]).any():
                raise ValidationError("box must be (2, d) with lo < hi")
            object.__setattr__(self, "box", box)
        if self.kind == "density_box":
            if self.density is None or self.density_bound is None:
                raise ValidationError("density_box needs density and density_bound")
        if self.kind == "empirical":
            if self.sample is None or len(self.sample) == 0:
                raise ValidationError("empirical measure needs a non-empty sample")
            object.__setattr__(self, "sample",
                               np.asarray(self.sample, dtype=np.float64))

    @staticmethod
    def uniform(box) -> "Measure":
        return Measure(kind="uniform", box=box)

    @property
    def dim(self) -> int:
        if self.kind == "empirical":
            return 1 if self.sample.ndim == 1 else self.sample.shape[1]
        return self.box.shape[1]

    def bounded_density(self) -> float:
        """An upper bound for the density w.r.t. Lebesgue (None for empirical)."""
        if self.kind == "uniform":
            return float(1.0 / np.prod(self.box[1] - self.box[0]))
        if self.kind == "density_box":
            return float(self.density_bound)
        raise ValidationError("empirical measures carry no density bound")

    def draw(self, count: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        if self.kind == "empirical":
            idx = rng.integers(0, len(self.sample), count)
            return self.sample[idx]
        pts = self.box[0] + rng.random((count, self.dim)) * (self.box[1] - self.box[0])
        return pts[:, 0] if self.dim == 1 else pts

    def integrate(self, func, n_mc: int = 100_000, seed: int = 0):
        """(integral estimate, standard error); exact where closed forms exist."""
        exact = getattr(func, "uniform_integral", None)
        if exact is not None and self.kind == "uniform" and self.dim == 1:
            lo, hi = float(self.box[0, 0]), float(self.box[1, 0])
            return exact(lo, hi) / (hi - lo), 0.0
        if self.kind == "empirical":
            vals = np.asarray(func(self.sample), dtype=np.float64)
            return float(vals.mean()), 0.0
        pts = self.draw(n_mc, seed)
        vals = np.asarray(func(pts), dtype=np.float64)
        if self.kind == "density_box":
            flat = pts.reshape(n_mc, -1)
            dens = np.asarray(self.density(flat if self.dim > 1 else flat[:, 0]))
            vals = vals * dens * float(np.prod(self.box[1] - self.box[0]))
        return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_mc))

    def lp_gap(self, lower, upper, s: float, n_mc: int = 100_000, seed: int = 0):
        """(||u - l||_s estimate, propagated standard error)."""
        func = _GapPower(lower, upper, s)
        mean, se = self.integrate(func, n_mc, seed)
        mean = max(mean, 0.0)
        gap = mean ** (1.0 / s)
        if se == 0.0 or mean == 0.0:
            return gap, 0.0
        return gap, se / (s * mean ** (1.0 - 1.0 / s))

    def quantile_knots(self, mass_pitch: float) -> np.ndarray:
        """1-d knots t_0 < ... < t_K with cell masses <= mass_pitch."""
        if self.dim != 1:
            raise ValidationError("quantile knots are 1-d only")
        cells = max(int(np.ceil(1.0 / mass_pitch)), 1)
        if self.kind == "uniform":
            lo, hi = float(self.box[0, 0]), float(self.box[1, 0])
            return np.linspace(lo, hi, cells + 1)
        if self.kind == "density_box":
            lo, hi = float(self.box[0, 0]), float(self.box[1, 0])
            grid = np.linspace(lo, hi, 20_001)
            dens = np.asarray(self.density(grid), dtype=np.float64)
            cdf = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0
                                                   * np.diff(grid))])
            cdf /= cdf[-1]
            targets = np.linspace(0.0, 1.0, cells + 1)
            return np.interp(targets, cdf, grid)
        srt = np.sort(self.sample.reshape(-1))
        mids = (srt[:-1] + srt[1:]) / 2.0
        stride = max(int(np.ceil(len(srt) * mass_pitch)), 1)
        inner = mids[stride - 1::stride]
        span = srt[-1] - srt[0] if srt[-1] > srt[0] else 1.0
        return np.concatenate([[srt[0] - 1e-9 * span], inner,
                               [srt[-1] + 1e-9 * span]])


class _GapPower:
    def __init__(self, lower, upper, s):
        self.lower, self.upper, self.s = lower, upper, s

    def __call__(self, pts):
        return np.clip(self.upper(pts) - self.lower(pts), 0.0, None) ** self.s

    def uniform_integral(self, lo, hi):
        ul = getattr(self.upper, "uniform_power_integral", None)
        ll = getattr(self.lower, "uniform_power_integral", None)
        if self.s == 1.0 and ul is not None and ll is not None:
            return ul(lo, hi) - ll(lo, hi)
        grid = np.linspace(lo, hi, 20_001)
        return float(np.trapz(self(grid), grid))


# ---------------------------------------------------------------------------
# bracket function shapes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        base = pts if pts.ndim == 1 else pts[:, 0]
        return np.full(base.shape, self.value)

    @property
    def lipschitz(self):
        return 0.0

    @property
    def sup(self):
        return abs(self.value)

    def uniform_power_integral(self, lo, hi):
        return self.value * (hi - lo)


@dataclass(frozen=True)
class FallingRamp:
    """1 for y <= start, linear to 0 at start + width."""

    start: float
    width: float

    def __call__(self, pts):
        y = np.asarray(pts, dtype=np.float64)
        return np.clip((self.start + self.width - y) / self.width, 0.0, 1.0)

    @property
    def lipschitz(self):
        return 1.0 / self.width

    @property
    def sup(self):
        return 1.0

    def uniform_power_integral(self, lo, hi):
        # integral of the ramp itself (s = 1) over [lo, hi], unnormalized
        a, b = self.start, self.start + self.width
        flat = max(min(a, hi) - lo, 0.0)
        left = max(lo, a)
        right = min(hi, b)
        ramp = 0.0
        if right > left:
            v1 = (b - left) / self.width
            v2 = (b - right) / self.width
            ramp = (v1 + v2) / 2.0 * (right - left)
        return flat + ramp


@dataclass(frozen=True)
class IntervalBump:
    """0 outside (a, b); 1 on [a + w, b - w]; linear ramps inside."""

    a: float
    b: float
    width: float

    def __call__(self, pts):
        y = np.asarray(pts, dtype=np.float64)
        rise = (y - self.a) / self.width
        fall = (self.b - y) / self.width
        return np.clip(np.minimum(rise, fall), 0.0, 1.0)

    @property
    def lipschitz(self):
        return 1.0 / self.width

    @property
    def sup(self):
        return 1.0


@dataclass(frozen=True)
class IntervalCover:
    """1 on [a, b]; ramps to 0 at a - w and b + w."""

    a: float
    b: float
    width: float

    def __call__(self, pts):
        y = np.asarray(pts, dtype=np.float64)
        rise = (y - (self.a - self.width)) / self.width
        fall = ((self.b + self.width) - y) / self.width
        return np.clip(np.minimum(np.minimum(rise, fall), 1.0), 0.0, 1.0)

    @property
    def lipschitz(self):
        return 1.0 / self.width

    @property
    def sup(self):
        return 1.0


@dataclass(frozen=True, eq=False)
class ProductShape:
    """Coordinatewise product of [0, 1]-valued 1-d shapes."""

    factors: tuple

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        out = np.ones(pts.shape[0])
        for i, f in enumerate(self.factors):
            out *= f(pts[:, i])
        return out

    @property
    def lipschitz(self):
        # product of [0,1]-bounded Lipschitz factors
        return float(sum(f.lipschitz for f in self.factors))

    @property
    def sup(self):
        return 1.0


@dataclass(frozen=True, eq=False)
class EllipsoidRamp:
    """1 while sqrt(q) <= level, linear to 0 at level + width.

    q(y) = sum_i ((y_i - center_i) / radii_i)^2; the gradient of sqrt(q) is
    bounded by 1/min(radii), so the Lipschitz constant is that over width.
    """

    center: np.ndarray
    radii: np.ndarray
    level: float
    width: float

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        z = (pts - self.center[None, :]) / self.radii[None, :]
        rho = np.sqrt((z * z).sum(axis=1))
        return np.clip((self.level + self.width - rho) / self.width, 0.0, 1.0)

    @property
    def lipschitz(self):
        return 1.0 / (float(self.radii.min()) * self.width)

    @property
    def sup(self):
        return 1.0


def _c_norm(shape) -> float:
    return float(shape.sup + shape.lipschitz)


# ---------------------------------------------------------------------------
# brackets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Bracket:
    """A sandwich pair with its measured gap and smoothness norm."""

    lower: object
    upper: object
    ls_gap: float
    gap_se: float
    c_norm: float
    s: float


def _finish_bracket(lower, upper, mu, s, gap_mc, seed) -> Bracket:
    gap, se = mu.lp_gap(lower, upper, s, n_mc=gap_mc, seed=seed)
    return Bracket(lower=lower, upper=upper, ls_gap=gap, gap_se=se,
                   c_norm=max(_c_norm(lower), _c_norm(upper)), s=s)


# ---------------------------------------------------------------------------
# schemes
# ---------------------------------------------------------------------------

class IntervalBracketScheme:
    """Quantile-knot covering of {1{y <= x}} by falling-ramp pairs.

    Knots carry mass <= eps^s / 4 per cell; a bracket spans two knot cells so
    its gap region holds at most four cells of mass.  Ramp widths come from
    the knot spacing, floored by what the smoothness budget allows.
    """

    kind = "interval_indicators"

    def __init__(self, fc: FunctionClass, mu: Measure, eps: float, s: float,
                 budget: float, gap_mc: int = 20_000):
        self.fc, self.mu, self.eps, self.s, self.budget = fc, mu, eps, s, budget
        self.gap_mc = gap_mc
        if eps >= 1.0:
            self.trivial = True
            self.count = 1
            return
        self.trivial = False
        mass_pitch = eps ** s / 4.0
        knots = mu.quantile_knots(mass_pitch)
        spacing = np.diff(knots)
        min_w = spacing[spacing > 0].min() if (spacing > 0).any() else None
        if min_w is None:
            raise ValidationError("measure support is degenerate")
        # budget allows Lipschitz constants up to budget - 1
        if budget <= 1.0 or 1.0 / (budget - 1.0) > min_w:
            needed = 1.0 + 1.0 / min_w
            raise ValidationError(
                f"budget {budget:.6g} too small for eps={eps:.6g}: "
                f"the construction needs at least {needed:.6g}")
        self.knots = knots
        self.count = max((knots.size - 1 + 1) // 2, 1) + 2  # interior + 2 edge cells

    def cell_of(self, member_index: int) -> int:
        x = float(self.fc.params[member_index])
        if self.trivial:
            return 0
        k = self.knots
        if x < k[0]:
            return 0
        if x >= k[-1]:
            return self.count - 1
        j = int(np.searchsorted(k, x, side="right") - 1) // 2
        return min(j + 1, self.count - 2)

    def bracket(self, cell: int, seed: int = 0) -> Bracket:
        if self.trivial:
            return _finish_bracket(Constant(0.0), Constant(1.0), self.mu,
                                   self.s, self.gap_mc, seed)
        k = self.knots
        last = k.size - 1
        if cell == 0:
            lower = Constant(0.0)
            hi_edge = k[min(2, last)]
            w = max(k[min(3, last)] - hi_edge, hi_edge - k[0])
            upper = FallingRamp(hi_edge, w)
        elif cell == self.count - 1:
            lo_edge = k[max(last - 2, 0)]
            w = max(lo_edge - k[max(last - 3, 0)], k[last] - lo_edge)
            lower = FallingRamp(lo_edge - w, w)
            upper = Constant(1.0)
        else:
            j = cell - 1
            a = k[min(2 * j, last)]
            b = k[min(2 * j + 2, last)]
            wl = a - k[max(2 * j - 1, 0)]
            wu = k[min(2 * j + 3, last)] - b
            lower = FallingRamp(a - wl, wl) if wl > 0 else Constant(0.0)
            upper = FallingRamp(b, wu) if wu > 0 else Constant(1.0)
        return _finish_bracket(lower, upper, self.mu, self.s, self.gap_mc, seed)


class RectangleBracketScheme:
    """Corner-grid covering of box indicators 1{lo < y <= hi} by product ramps."""

    kind = "rectangle_indicators"

    def __init__(self, fc: FunctionClass, mu: Measure, eps: float, s: float,
                 budget: float, gap_mc: int = 100_000):
        if mu.kind == "empirical":
            raise ValidationError("rectangle brackets need a density-backed measure")
        self.fc, self.mu, self.eps, self.s, self.budget = fc, mu, eps, s, budget
        self.gap_mc = gap_mc
        d = fc.dim
        if eps >= 1.0:
            self.trivial = True
            self.count = 1
            return
        self.trivial = False
        box = mu.box
        # marginal density bound: full bound times the other coordinates' spans
        widths = box[1] - box[0]
        dens = mu.bounded_density()
        marg = max(float(dens * np.prod(widths) / widths[i]) for i in range(d))
        slab = eps ** s / (2.0 * d * marg)      # delta + 2 w per corner slab
        self.delta = slab / 2.0
        self.w = slab / 4.0
        lip = d / self.w
        if 1.0 + lip > budget:
            raise ValidationError(
                f"budget {budget:.6g} too small for eps={eps:.6g}: "
                f"the construction needs at least {1.0 + lip:.6g}")
        self.box = box
        self.grids = [int(np.ceil(float(widths[i]) / self.delta)) for i in range(d)]
        per_corner = int(np.prod([g + 1 for g in self.grids]))
        self.count = per_corner ** 2

    def _coord_cell(self, value: float, i: int) -> int:
        lo = float(self.box[0, i])
        idx = int(np.floor((value - lo) / self.delta))
        return int(np.clip(idx, 0, self.grids[i]))

    def cell_of(self, member_index: int):
        if self.trivial:
            return 0
        p = self.fc.params[member_index]
        lo_cells = tuple(self._coord_cell(p[0, i], i) for i in range(self.fc.dim))
        hi_cells = tuple(self._coord_cell(p[1, i], i) for i in range(self.fc.dim))
        return lo_cells, hi_cells

    def bracket(self, cell, seed: int = 0) -> Bracket:
        if self.trivial:
            return _finish_bracket(Constant(0.0), Constant(1.0), self.mu,
                                   self.s, self.gap_mc, seed)
        lo_cells, hi_cells = cell
        d = self.fc.dim
        lo0 = self.box[0]
        inner, outer = [], []
        degenerate = False
        for i in range(d):
            tlo = lo0[i] + lo_cells[i] * self.delta
            thi = tlo + self.delta
            ulo = lo0[i] + hi_cells[i] * self.delta
            uhi = ulo + self.delta
            outer.append(IntervalCover(tlo, uhi, self.w))
            if ulo - thi <= 2.0 * self.w:
                degenerate = True
            else:
                inner.append(IntervalBump(thi, ulo, self.w))
        lower = Constant(0.0) if degenerate else ProductShape(tuple(inner))
        upper = ProductShape(tuple(outer))
        return _finish_bracket(lower, upper, self.mu, self.s, self.gap_mc, seed)


class EllipsoidBracketScheme:
    """Covering of ellipsoid indicators by radial ramps of sqrt(q).

    Radii are gridded multiplicatively above a floor rho0; below it an
    ellipsoid is so thin that a box cover alone meets the gap target.  Center
    cells use one global pitch tied to rho0, which makes the count a crude
    (but closed-form) upper bound.
    """

    kind = "ellipsoid_indicators"

    def __init__(self, fc: FunctionClass, mu: Measure, eps: float, s: float,
                 budget: float, gap_mc: int = 100_000):
        if mu.kind == "empirical":
            raise ValidationError("ellipsoid brackets need a density-backed measure")
        self.fc, self.mu, self.eps, self.s, self.budget = fc, mu, eps, s, budget
        self.gap_mc = gap_mc
        d = fc.dim
        if eps >= 1.0:
            self.trivial = True
            self.count = 1
            return
        self.trivial = False
        dens = mu.bounded_density()
        centers = fc.params[:, 0]
        radii = fc.params[:, 1]
        self.c_lo = centers.min(axis=0)
        self.c_hi = centers.max(axis=0)
        self.big_d = float(radii.max())
        vd = math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)
        mass = eps ** s
        self.rho0 = mass / (12.0 * dens * 6.0 * (4.0 * self.big_d) ** (d - 1)) \
            if d > 1 else mass / (72.0 * dens)
        self.rho0 = min(self.rho0, self.big_d / 2.0)
        width = mass / (2.0 * dens * vd * self.big_d ** d * d * 1.5 ** (d - 1))
        self.w_m = width / 2.0
        self.log_pitch = width / 8.0   # half-pitch of the log-radius grid
        self.eta = width / 8.0
        self.w_box = self.rho0
        self.hc = self.eta * self.rho0 / math.sqrt(d)
        lip = max(1.0 / (self.rho0 * self.w_m * math.exp(-self.log_pitch)),
                  d / self.w_box)
        if 1.0 + lip > budget:
            raise ValidationError(
                f"budget {budget:.6g} too small for eps={eps:.6g}: "
                f"the construction needs at least {1.0 + lip:.6g}")
        self.bands = int(np.ceil(np.log(self.big_d / self.rho0)
                                 / (2.0 * self.log_pitch))) + 1
        span = np.maximum(self.c_hi - self.c_lo, 1e-12)
        self.center_grids = [int(np.ceil(float(sp) / self.hc)) for sp in span]
        per_center = int(np.prod([g + 1 for g in self.center_grids]))
        self.count = per_center * (self.bands + 1) ** d

    def _band_of(self, r: float) -> int:
        if r <= self.rho0:
            return -1
        b = int(np.floor(np.log(r / self.rho0) / (2.0 * self.log_pitch)))
        return min(b, self.bands - 1)

    def cell_of(self, member_index: int):
        if self.trivial:
            return 0
        p = self.fc.params[member_index]
        c, r = p[0], p[1]
        if (c < self.c_lo - 1e-12).any() or (c > self.c_hi + 1e-12).any() \
                or (r > self.big_d + 1e-12).any():
            raise ValidationError("member parameters outside the ladder's domain")
        bands = tuple(self._band_of(float(ri)) for ri in r)
        cells = tuple(int(np.clip(np.floor((ci - lo) / self.hc), 0, g))
                      for ci, lo, g in zip(c, self.c_lo, self.center_grids))
        return bands, cells

    def _band_edges(self, b: int) -> tuple[float, float]:
        if b < 0:
            return 0.0, self.rho0
        lo = self.rho0 * math.exp(2.0 * self.log_pitch * b)
        hi = min(self.rho0 * math.exp(2.0 * self.log_pitch * (b + 1)), self.big_d)
        return lo, hi

    def bracket(self, cell, seed: int = 0) -> Bracket:
        if self.trivial:
            return _finish_bracket(Constant(0.0), Constant(1.0), self.mu,
                                   self.s, self.gap_mc, seed)
        bands, cells = cell
        d = self.fc.dim
        c0 = np.array([self.c_lo[i] + (cells[i] + 0.5) * self.hc for i in range(d)])
        if any(b < 0 for b in bands):
            covers = []
            for i in range(d):
                _, r_hi = self._band_edges(bands[i])
                half = r_hi + self.hc
                covers.append(IntervalCover(c0[i] - half, c0[i] + half, self.w_box))
            return _finish_bracket(Constant(0.0), ProductShape(tuple(covers)),
                                   self.mu, self.s, self.gap_mc, seed)
        r0 = np.array([math.sqrt(np.prod(self._band_edges(b))) for b in bands])
        shrink = math.exp(-self.log_pitch)
        grow = math.exp(self.log_pitch)
        level_lo = shrink - self.eta - self.w_m
        lower = EllipsoidRamp(c0, r0, level_lo - self.w_m, self.w_m) \
            if level_lo > self.w_m else Constant(0.0)
        upper = EllipsoidRamp(c0, r0, grow + self.eta, self.w_m)
        return _finish_bracket(lower, upper, self.mu, self.s, self.gap_mc, seed)


_SCHEMES = {
    "interval_indicators": IntervalBracketScheme,
    "rectangle_indicators": RectangleBracketScheme,
    "ellipsoid_indicators": EllipsoidBracketScheme,
}


def bracket_scheme(fc: FunctionClass, mu: Measure, eps: float, s: float,
                   budget: float):
    """Lazy bracket covering for the class at the given gap target."""
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if s < 1:
        raise ValidationError("s must be >= 1")
    cls = _SCHEMES.get(fc.kind)
    if cls is None:
        raise ValidationError(f"no bracket construction for kind {fc.kind!r}")
    return cls(fc, mu, float(eps), float(s), float(budget))


def build_brackets(fc: FunctionClass, mu: Measure, eps: float, s: float,
                   budget: float) -> list[Bracket]:
    """Materialize the covering; only the cells containing members are built.

    Distinct members sharing a cell share one bracket, so the result has at
    most min(count, n_members) entries and every member is sandwiched by the
    bracket of its own cell.
    """
    scheme = bracket_scheme(fc, mu, eps, s, budget)
    cells = {}
    for i in range(fc.n_members):
        key = scheme.cell_of(i) if not scheme.trivial else 0
        if key not in cells:
            if len(cells) > _MATERIALIZE_LIMIT:
                raise ValidationError(
                    "covering too large to materialize; use bracketing_number")
            cells[key] = scheme.bracket(key, seed=len(cells))
    return list(cells.values())


# ---------------------------------------------------------------------------
# entropy profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PsiBudget:
    """Smoothness budget as a function of 1/eps.

    exponential: psi(x) = exp(c * x^(1/gamma));  polynomial: psi(x) = c * x^gamma.
    """

    kind: str = "exponential"
    c: float = 8.0
    gamma: float = 2.0

    def __post_init__(self):
        if self.kind not in ("exponential", "polynomial"):
            raise ValidationError("psi kind must be exponential or polynomial")
        if self.c <= 0 or self.gamma <= 0:
            raise ValidationError("psi parameters must be positive")

    def __call__(self, x: float) -> float:
        if self.kind == "exponential":
            return float(math.exp(self.c * x ** (1.0 / self.gamma)))
        return float(self.c * x ** self.gamma)

    def describe(self) -> str:
        if self.kind == "exponential":
            return f"exp({self.c:g} * x^(1/{self.gamma:g}))"
        return f"{self.c:g} * x^{self.gamma:g}"


@dataclass(frozen=True, eq=False)
class EntropyProfile:
    """Constructive covering counts over a dyadic eps grid."""

    eps_grid: np.ndarray        # decreasing, eps_q = 2^-q
    counts: np.ndarray          # nondecreasing (running max applied)
    psi: PsiBudget
    r: float
    gamma: float
    constructive: bool = True

    @property
    def levels(self) -> np.ndarray:
        return np.arange(1, self.eps_grid.size + 1)

    def terms(self, r: float | None = None) -> np.ndarray:
        r = self.r if r is None else r
        q = self.levels.astype(np.float64)
        return 2.0 ** (-(r + 1.0) * q) * self.counts.astype(np.float64) ** 2

    def to_csv(self, path) -> None:
        terms = self.terms()
        with open(path, "w", newline="") as fh:
            fh.write("q,eps,count,budget,term\n")
            for i, q in enumerate(self.levels):
                fh.write(f"{q},{self.eps_grid[i]:.12g},{self.counts[i]},"
                         f"{self.psi(2.0 ** q):.12g},{terms[i]:.12g}\n")


def bracketing_number(fc: FunctionClass, mu: Measure, eps_grid, s: float,
                      psi: PsiBudget, r: float = 1.0) -> EntropyProfile:
    """Covering counts of the constructive schemes (upper bounds on the true
    minimum).  Counts are forced nondecreasing as eps shrinks, which realizes
    the sup over coarser gaps in the summability criterion."""
    eps = np.asarray(eps_grid, dtype=np.float64)
    if eps.ndim != 1 or eps.size == 0 or (np.diff(eps) >= 0).any():
        raise ValidationError("eps_grid must be strictly decreasing")
    counts = []
    for e in eps:
        scheme = bracket_scheme(fc, mu, float(e), s, psi(1.0 / float(e)))
        counts.append(int(scheme.count))
    counts = np.maximum.accumulate(np.asarray(counts, dtype=object))
    return EntropyProfile(eps_grid=eps, counts=counts, psi=psi, r=r,
                          gamma=psi.gamma)


@dataclass(frozen=True, eq=False)
class EntropyVerdict:
    summable: bool
    tail_ratio: float
    ratio_band: tuple
    terms: np.ndarray
    partial_sums: np.ndarray

    def to_record(self) -> dict:
        return {"summable": bool(self.summable),
                "tail_ratio": float(self.tail_ratio),
                "ratio_band": [float(self.ratio_band[0]), float(self.ratio_band[1])],
                "levels": int(self.terms.size)}


def entropy_condition_check(profile: EntropyProfile,
                            r: float | None = None) -> EntropyVerdict:
    """Summability check of sum_q 2^{-(r+1) q} N_q^2 via the fitted tail ratio.

    The fitted ratio is the geometric mean of consecutive term ratios over the
    last half of the levels; the band reports their min and max.  Verdict
    "summable" means fitted ratio < 1.
    """
    terms = profile.terms(r)
    if terms.size < 8:
        raise ValidationError("need at least 8 dyadic levels")
    ratios = terms[1:] / terms[:-1]
    tail = ratios[ratios.size // 2:]
    fitted = float(np.exp(np.mean(np.log(tail))))
    return EntropyVerdict(summable=fitted < 1.0, tail_ratio=fitted,
                          ratio_band=(float(tail.min()), float(tail.max())),
                          terms=terms, partial_sums=np.cumsum(terms))


# ---------------------------------------------------------------------------
# chaining projections
# ---------------------------------------------------------------------------

def tau_q(t: float, q: int) -> float:
    """Dyadic floor of t at level q, capped so the final cell is [1-2^-q, 1]."""
    if not 0.0 <= t <= 1.0:
        raise ValidationError("t must lie in [0, 1]")
    if q < 1:
        raise ValidationError("q must be >= 1")
    step = 2.0 ** -q
    j = min(int(np.floor(t / step)), 2 ** q - 1)
    return j * step


def tau_q_prime(t: float, q: int) -> float:
    return tau_q(t, q) + 2.0 ** -q


@dataclass(frozen=True, eq=False)
class ChainProjection:
    """Level-q approximation of one (member, time) pair."""

    lower: object        # pi_q f
    upper: object        # pi_q' f
    tau: float
    tau_prime: float
    level: int
    cell: object


class BracketLadder:
    """Nested-level bracket schemes (eps = 2^-q) for chaining diagnostics."""

    def __init__(self, fc: FunctionClass, mu: Measure, s: float = 1.0,
                 psi: PsiBudget | None = None, q_max: int = 10):
        if q_max < 1:
            raise ValidationError("q_max must be >= 1")
        self.fc = fc
        self.mu = mu
        self.s = s
        self.psi = psi or PsiBudget()
        self.q_max = q_max
        self.schemes = {}
        for q in range(1, q_max + 1):
            self.schemes[q] = bracket_scheme(fc, mu, 2.0 ** -q, s,
                                             self.psi(2.0 ** q))

    def counts(self) -> EntropyProfile:
        eps = 2.0 ** -np.arange(1, self.q_max + 1, dtype=np.float64)
        counts = np.maximum.accumulate(
            np.asarray([self.schemes[q].count for q in range(1, self.q_max + 1)],
                       dtype=object))
        return EntropyProfile(eps_grid=eps, counts=counts, psi=self.psi,
                              r=1.0, gamma=self.psi.gamma)

    def project(self, member_index: int, t: float, q: int) -> ChainProjection:
        if q not in self.schemes:
            raise ValidationError(f"level {q} not constructed (1..{self.q_max})")
        if not 0 <= member_index < self.fc.n_members:
            raise ValidationError("member index out of range")
        scheme = self.schemes[q]
        cell = scheme.cell_of(member_index) if not scheme.trivial else 0
        br = scheme.bracket(cell)
        return ChainProjection(lower=br.lower, upper=br.upper,
                               tau=tau_q(t, q), tau_prime=tau_q_prime(t, q),
                               level=q, cell=cell)

    def bracket_for(self, member_index: int, q: int) -> Bracket:
        scheme = self.schemes[q]
        cell = scheme.cell_of(member_index) if not scheme.trivial else 0
        return scheme.bracket(cell)
