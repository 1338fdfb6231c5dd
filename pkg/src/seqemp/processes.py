"""Data models and path simulators.

Four model families are supported:

* finite-state Markov chains given by a row-stochastic transition matrix,
  started from the stationary vector,
* iterated function systems (random Lipschitz maps chosen with state-dependent
  probabilities), started from an arbitrary point and burned in,
* truncated moving averages of an i.i.d. innovation sequence,
* expanding interval maps (doubling and tent), simulated through a
  randomized digit stream so orbits do not collapse under binary floats.

Every simulator is pure in (spec, n, seed): identical inputs reproduce the
sample path bit for bit.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import ValidationError
from .rng import stream

__all__ = [
    "FiniteChainSpec",
    "AffineMap",
    "IfsSpec",
    "MaSpec",
    "IidSpec",
    "SamplePath",
    "simulate_chain",
    "simulate_chain_batch",
    "chain_block_sums",
    "simulate_ifs",
    "check_contraction_average",
    "ifs_condition_report",
    "sobol_probe_triples",
    "simulate_ma",
    "simulate_iid",
    "simulate_expanding_map",
    "simulate",
]

_MANTISSA_BITS = 53


# ---------------------------------------------------------------------------
# sample paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SamplePath:
    """An ordered block of observations plus its generation metadata."""

    values: np.ndarray
    seed: int
    model_id: str
    burn_in: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim not in (1, 2) or values.shape[0] == 0:
            raise ValidationError("sample path must hold at least one observation")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def to_csv(self, path) -> None:
        """One row per time index."""
        vals = self.values if self.values.ndim == 2 else self.values[:, None]
        header = ",".join(f"x{i}" for i in range(vals.shape[1]))
        np.savetxt(path, vals, delimiter=",", header=header, comments="")

    def save_npz(self, path) -> None:
        np.savez(path, values=self.values, seed=self.seed,
                 model_id=self.model_id, burn_in=self.burn_in)

    @staticmethod
    def load_npz(path) -> "SamplePath":
        with np.load(path, allow_pickle=False) as data:
            return SamplePath(values=data["values"], seed=int(data["seed"]),
                              model_id=str(data["model_id"]), burn_in=int(data["burn_in"]))


# ---------------------------------------------------------------------------
# finite-state Markov chains
# ---------------------------------------------------------------------------

def _stationary_vector(transition: np.ndarray) -> np.ndarray:
    """Solve nu P = nu, sum(nu) = 1 by least squares on the augmented system."""
    s = transition.shape[0]
    a = np.vstack([transition.T - np.eye(s), np.ones((1, s))])
    b = np.zeros(s + 1)
    b[-1] = 1.0
    nu, *_ = np.linalg.lstsq(a, b, rcond=None)
    nu = np.clip(nu, 0.0, None)
    total = nu.sum()
    if total <= 0:
        raise ValidationError("failed to compute a stationary vector")
    return nu / total


@dataclass(frozen=True, eq=False)
class FiniteChainSpec:
    """Row-stochastic transition matrix with its stationary vector.

    ``state_values`` embeds the finite labels into the reals so that
    real-indexed function classes (interval indicators etc.) can be evaluated
    on chain paths.  Defaults to 0, 1, ..., S-1.
    """

    transition: np.ndarray
    state_values: np.ndarray | None = None
    stationary: np.ndarray = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.transition, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise ValidationError("transition must be a square matrix")
        if (p < 0).any():
            raise ValidationError("transition entries must be non-negative")
        row_err = np.abs(p.sum(axis=1) - 1.0).max()
        if row_err > 1e-12:
            raise ValidationError(
                f"transition rows must sum to 1 (max deviation {row_err:.3e})")
        object.__setattr__(self, "transition", p)
        nu = _stationary_vector(p)
        resid = np.abs(nu @ p - nu).max()
        if resid > 1e-10:
            raise ValidationError(f"stationary vector residual {resid:.3e} exceeds 1e-10")
        object.__setattr__(self, "stationary", nu)
        if self.state_values is None:
            vals = np.arange(p.shape[0], dtype=np.float64)
        else:
            vals = np.asarray(self.state_values, dtype=np.float64)
            if vals.shape != (p.shape[0],):
                raise ValidationError("state_values must have one entry per state")
        object.__setattr__(self, "state_values", vals)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]


def two_state_chain(a: float, b: float) -> FiniteChainSpec:
    """Chain on {0, 1} with P(0->1) = a and P(1->0) = b."""
    return FiniteChainSpec(np.array([[1.0 - a, a], [b, 1.0 - b]]))


def simulate_chain(spec: FiniteChainSpec, n: int, seed: int) -> SamplePath:
    """Stationary chain path of length n (X_0 drawn from the stationary vector)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cum_rows = np.cumsum(spec.transition, axis=1)
    cum_rows[:, -1] = 1.0
    cum_nu = np.cumsum(spec.stationary)
    cum_nu[-1] = 1.0
    u = rng.random(n)
    states = np.empty(n, dtype=np.int64)
    s = int(np.searchsorted(cum_nu, u[0], side="right"))
    states[0] = s
    for i in range(1, n):
        s = int(np.searchsorted(cum_rows[s], u[i], side="right"))
        states[i] = s
    values = spec.state_values[states]
    return SamplePath(values=values, seed=int(seed), model_id="finite_chain")


def _chain_states_init(spec, reps, u0):
    cum_nu = np.cumsum(spec.stationary)
    cum_nu[-1] = 1.0
    return np.searchsorted(cum_nu, u0, side="right").astype(np.int64)


_TIME_BLOCK = 2048


def _chain_step_batch(spec, n, reps, seed, first_rep, consume):
    """Drive a batch of chains; consume(i, states) sees X_i for i = 0..n.

    Row r draws from stream(seed, "chain-path", first_rep + r); uniforms are
    pulled in time blocks, which leaves the per-replicate sequences (and thus
    the paths) independent of the blocking.
    """
    cum = np.cumsum(spec.transition, axis=1)
    cum[:, -1] = 1.0
    gens = [stream(seed, "chain-path", first_rep + r) for r in range(reps)]
    u0 = np.array([g.random() for g in gens])
    states = _chain_states_init(spec, reps, u0)
    consume(0, states)
    done = 0
    buf = np.empty((reps, _TIME_BLOCK))
    while done < n:
        width = min(_TIME_BLOCK, n - done)
        for r, g in enumerate(gens):
            buf[r, :width] = g.random(width)
        for t in range(width):
            states = (cum[states] < buf[:, t][:, None]).sum(axis=1)
            consume(done + t + 1, states)
        done += width


def simulate_chain_batch(spec: FiniteChainSpec, n: int, reps: int, seed: int,
                         first_rep: int = 0) -> np.ndarray:
    """(reps, n) matrix of state labels; replicate r uses its own derived stream.

    Chunking across replicates changes nothing: row r is generated from
    stream(seed, "chain-path", first_rep + r), so a worker holding a slice of
    the replicate range reproduces exactly the rows it owns.
    """
    if n < 1 or reps < 1:
        raise ValidationError("n and reps must be >= 1")
    out = np.empty((reps, n), dtype=np.int64)

    def consume(i, states):
        if i >= 1:
            out[:, i - 1] = states

    # X_0 is the stationary draw; the emitted block is X_1..X_n, equally
    # stationary and one step decorrelated from the seed draw
    _chain_step_batch(spec, n, reps, seed, first_rep, consume)
    return out


def chain_block_sums(spec: FiniteChainSpec, f: np.ndarray, g: np.ndarray | None,
                     split: float, n: int, reps: int, seed: int,
                     first_rep: int = 0) -> np.ndarray:
    """Per-replicate S_n = sum_{i<=[n*split]} f(X_i) + sum_{i>[n*split]} g(X_i).

    Streams over time so memory stays O(reps); with g=None (or g=f) and
    split=1 this is the plain functional sum over the whole block.
    """
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (spec.n_states,):
        raise ValidationError("f must assign one value per state")
    if g is None:
        g = f
    g = np.asarray(g, dtype=np.float64)
    if g.shape != (spec.n_states,):
        raise ValidationError("g must assign one value per state")
    if not 0.0 <= split <= 1.0:
        raise ValidationError("split must lie in [0, 1]")
    k_split = int(np.floor(n * split + 1e-12))
    sums = np.zeros(reps, dtype=np.float64)

    def consume(i, states):
        if 1 <= i <= k_split:
            sums[:] = sums + f[states]
        elif i > k_split:
            sums[:] = sums + g[states]

    _chain_step_batch(spec, n, reps, seed, first_rep, consume)
    return sums


# ---------------------------------------------------------------------------
# iterated function systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> A x + b on R^d (scalars are accepted for d = 1)."""

    scale: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.scale, dtype=np.float64))
        b = np.atleast_1d(np.asarray(self.offset, dtype=np.float64))
        if a.shape[0] != a.shape[1] or a.shape[0] != b.shape[0]:
            raise ValidationError("affine map dimensions are inconsistent")
        object.__setattr__(self, "scale", a)
        object.__setattr__(self, "offset", b)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.scale @ x + self.offset

    @property
    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.scale, 2))


def _euclidean(x, y):
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


@dataclass(frozen=True, eq=False)
class IfsSpec:
    """Random-map model: step applies map T_i with probability p_i(x).

    ``probs`` entries are either constants or callables of the state.  The
    probabilities are validated (sum to 1, each in [0, 1]) on a Sobol probe
    grid over ``domain``.
    """

    maps: tuple
    probs: tuple
    domain: np.ndarray = None  # (2, d) lo/hi box used for probes and start
    metric: Callable = None
    probe_count: int = 128

    def __post_init__(self):
        if len(self.maps) == 0:
            raise ValidationError("at least one map is required")
        if len(self.maps) != len(self.probs):
            raise ValidationError("maps and probs must have matching lengths")
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "probs", tuple(self.probs))
        if self.domain is None:
            d = self.maps[0].offset.shape[0] if isinstance(self.maps[0], AffineMap) else 1
            box = np.array([[0.0] * d, [1.0] * d])
        else:
            box = np.asarray(self.domain, dtype=np.float64)
            if box.ndim == 1:
                box = box[:, None]
        if box.shape[0] != 2 or (box[1] <= box[0]).any():
            raise ValidationError("domain must be a (2, d) lo/hi box with lo < hi")
        object.__setattr__(self, "domain", box)
        object.__setattr__(self, "metric", self.metric or _euclidean)
        self._validate_probs()

    @property
    def dim(self) -> int:
        return self.domain.shape[1]

    def prob_vector(self, x: np.ndarray) -> np.ndarray:
        return np.array([p(x) if callable(p) else float(p) for p in self.probs])

    def _probe_points(self, count, seed=0):
        sampler = qmc.Sobol(d=self.dim, scramble=True, seed=seed)
        pts = sampler.random(count)
        return self.domain[0] + pts * (self.domain[1] - self.domain[0])

    def _validate_probs(self):
        for x in self._probe_points(self.probe_count):
            p = self.prob_vector(x)
            if (p < -1e-12).any() or (p > 1 + 1e-12).any():
                raise ValidationError(f"probability out of [0,1] at probe {x}")
            if abs(p.sum() - 1.0) > 1e-12:
                raise ValidationError(
                    f"probabilities sum to {p.sum():.15f} != 1 at probe {x}")


def half_maps_ifs(state_probs=None) -> IfsSpec:
    """The two-map system T_0(x) = x/2, T_1(x) = x/2 + 1/2 on [0, 1]."""
    maps = (AffineMap(0.5, 0.0), AffineMap(0.5, 0.5))
    probs = state_probs if state_probs is not None else (0.5, 0.5)
    return IfsSpec(maps=maps, probs=probs, domain=np.array([[0.0], [1.0]]))


def simulate_ifs(spec: IfsSpec, n: int, burn_in: int, seed: int,
                 x0: np.ndarray | None = None) -> SamplePath:
    """Path of length n after discarding burn_in steps from an arbitrary start."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if burn_in < 0:
        raise ValidationError("burn_in must be >= 0")
    rng = np.random.default_rng(seed)
    x = np.asarray(x0, dtype=np.float64) if x0 is not None \
        else (spec.domain[0] + spec.domain[1]) / 2.0
    x = np.atleast_1d(x)
    constant = not any(callable(p) for p in spec.probs)
    total = burn_in + n
    u = rng.random(total)
    out = np.empty((n, spec.dim))
    if constant:
        cum = np.cumsum([float(p) for p in spec.probs])
        cum[-1] = 1.0
        idx = np.searchsorted(cum, u, side="right")
        for i in range(total):
            x = spec.maps[idx[i]](x)
            if i >= burn_in:
                out[i - burn_in] = x
    else:
        for i in range(total):
            cum = np.cumsum(spec.prob_vector(x))
            cum[-1] = 1.0
            j = int(np.searchsorted(cum, u[i], side="right"))
            x = spec.maps[j](x)
            if i >= burn_in:
                out[i - burn_in] = x
    values = out[:, 0] if spec.dim == 1 else out
    return SamplePath(values=values, seed=int(seed), model_id="ifs", burn_in=burn_in)


@dataclass(frozen=True)
class ContractionReport:
    """Estimated average-contraction factor over a probe set."""

    rho: float
    contracts: bool
    probes_used: int
    probes_skipped: int


def check_contraction_average(spec: IfsSpec,
                              probe_triples: Sequence) -> ContractionReport:
    """max over probes (x, y, z) of sum_i d(T_i x, T_i y) p_i(z) / d(x, y).

    Degenerate probes with x = y are skipped with a warning.  The returned
    flag reports whether the estimate stayed below 1.
    """
    rho = 0.0
    used = skipped = 0
    for x, y, z in probe_triples:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        dxy = spec.metric(x, y)
        if dxy == 0.0:
            skipped += 1
            continue
        p = spec.prob_vector(z)
        num = sum(pi * spec.metric(m(x), m(y)) for pi, m in zip(p, spec.maps))
        rho = max(rho, num / dxy)
        used += 1
    if skipped:
        warnings.warn(f"skipped {skipped} probe(s) with x = y", stacklevel=2)
    if used == 0:
        raise ValidationError("no usable probe triples (all had x = y)")
    return ContractionReport(rho=float(rho), contracts=rho < 1.0,
                             probes_used=used, probes_skipped=skipped)


def sobol_probe_triples(spec: IfsSpec, count: int = 1000, seed: int = 0):
    """Sobol-sampled (x, y, z) triples in the spec's domain."""
    sampler = qmc.Sobol(d=3 * spec.dim, scramble=True, seed=seed)
    pts = sampler.random(count)
    lo, hi = spec.domain[0], spec.domain[1]
    d = spec.dim
    triples = []
    for row in pts:
        x = lo + row[:d] * (hi - lo)
        y = lo + row[d:2 * d] * (hi - lo)
        z = lo + row[2 * d:] * (hi - lo)
        triples.append((x, y, z))
    return triples


@dataclass(frozen=True)
class IfsConditionReport:
    """Probe-grid estimates of the model-side regularity suprema.

    These are reported as estimates over the probe set, never asserted as
    proofs.  ``h0`` bounds the mean map expansion, ``h1`` the mean displacement
    relative to the anchor ``x0``, ``h2`` couples displacement with the
    probability functions' Lipschitz constants.
    """

    h0: float
    h1: float
    h2: float
    anchor: np.ndarray
    probes_used: int


def ifs_condition_report(spec: IfsSpec, probe_triples=None,
                         anchor=None) -> IfsConditionReport:
    if probe_triples is None:
        probe_triples = sobol_probe_triples(spec, 1000, seed=0)
    x0 = np.atleast_1d(np.asarray(anchor, dtype=float)) if anchor is not None \
        else (spec.domain[0] + spec.domain[1]) / 2.0

    # Lipschitz constants of the probability functions, estimated on probe pairs.
    lips = np.zeros(len(spec.probs))
    for x, y, _ in probe_triples:
        dxy = spec.metric(x, y)
        if dxy == 0:
            continue
        px, py = spec.prob_vector(x), spec.prob_vector(y)
        lips = np.maximum(lips, np.abs(px - py) / dxy)

    h0 = h1 = h2 = 0.0
    used = 0
    for x, y, z in probe_triples:
        px = spec.prob_vector(x)
        dyz = spec.metric(y, z)
        if dyz > 0:
            h0 = max(h0, sum(pi * spec.metric(m(y), m(z)) for pi, m in
                             zip(px, spec.maps)) / dyz)
        h1 = max(h1, sum(pi * spec.metric(m(y), x0) for pi, m in
                         zip(px, spec.maps)) / (1.0 + spec.metric(y, x0)))
        h2 = max(h2, sum(li * spec.metric(m(x), x0) for li, m in
                         zip(lips, spec.maps)) / (1.0 + spec.metric(x, x0)))
        used += 1
    return IfsConditionReport(h0=h0, h1=h1, h2=h2, anchor=x0, probes_used=used)


# ---------------------------------------------------------------------------
# moving averages
# ---------------------------------------------------------------------------

_INNOVATIONS = ("uniform", "normal", "rademacher")


@dataclass(frozen=True, eq=False)
class MaSpec:
    """X_i = sum_{j=1..J} a_j xi_{i-j} with i.i.d. innovations.

    ``tail_bound`` declares sum_{j>J} |a_j| of the untruncated model (0 for an
    exactly truncated one); it enters the dependence tail sum but not the
    simulation.
    """

    coeffs: np.ndarray
    innovation: str = "normal"
    tail_bound: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.coeffs, dtype=np.float64)
        if a.ndim != 1 or a.size < 1:
            raise ValidationError("coeffs must be a non-empty 1-d array")
        if not np.isfinite(a).all() or not np.isfinite(self.tail_bound):
            raise ValidationError("coefficients and tail bound must be finite")
        if self.tail_bound < 0:
            raise ValidationError("tail_bound must be >= 0")
        if self.innovation not in _INNOVATIONS:
            raise ValidationError(f"innovation must be one of {_INNOVATIONS}")
        object.__setattr__(self, "coeffs", a)

    @property
    def truncation(self) -> int:
        return self.coeffs.size

    def theta_tail(self, i: int) -> float:
        """sum_{j>=i} |a_j| including the declared tail beyond the truncation."""
        if i < 1:
            raise ValidationError("tail index must be >= 1")
        head = np.abs(self.coeffs[i - 1:]).sum() if i <= self.truncation else 0.0
        return float(head + self.tail_bound)

    def innovation_variance(self) -> float:
        return {"uniform": 1.0 / 3.0, "normal": 1.0, "rademacher": 1.0}[self.innovation]


def _draw_innovations(kind: str, rng: np.random.Generator, size: int) -> np.ndarray:
    if kind == "uniform":
        return rng.uniform(-1.0, 1.0, size)
    if kind == "normal":
        return rng.standard_normal(size)
    return rng.integers(0, 2, size).astype(np.float64) * 2.0 - 1.0


def simulate_ma(spec: MaSpec, n: int, seed: int) -> SamplePath:
    """Moving-average path from a pre-sampled innovation buffer."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    j = spec.truncation
    buf = _draw_innovations(spec.innovation, rng, n + j - 1)
    values = np.convolve(buf, spec.coeffs, mode="full")[j - 1:j - 1 + n]
    return SamplePath(values=values, seed=int(seed), model_id="ma")


# ---------------------------------------------------------------------------
# i.i.d. baseline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IidSpec:
    """Independent draws; the degenerate baseline every test starts from."""

    dist: str = "uniform"  # uniform on [0,1] or standard normal

    def __post_init__(self):
        if self.dist not in ("uniform", "normal"):
            raise ValidationError("dist must be 'uniform' or 'normal'")


def simulate_iid(spec: IidSpec, n: int, seed: int) -> SamplePath:
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    values = rng.random(n) if spec.dist == "uniform" else rng.standard_normal(n)
    return SamplePath(values=values, seed=int(seed), model_id=f"iid_{spec.dist}")


# ---------------------------------------------------------------------------
# expanding interval maps via a randomized digit stream
# ---------------------------------------------------------------------------

def _bits_from_float(x0: float, length: int) -> np.ndarray:
    if not 0.0 <= x0 <= 1.0:
        raise ValidationError("initial point must lie in [0, 1]")
    bits = np.zeros(length, dtype=np.int8)
    y = x0
    for j in range(min(length, _MANTISSA_BITS + 1)):
        y *= 2.0
        b = int(y)
        if b >= 1:
            bits[j] = 1
            y -= b
    return bits


def _window_values(bits: np.ndarray, n: int) -> np.ndarray:
    w = 2.0 ** -np.arange(1, _MANTISSA_BITS + 1)
    windows = np.lib.stride_tricks.sliding_window_view(bits, _MANTISSA_BITS)[:n]
    return windows.astype(np.float64) @ w


def simulate_expanding_map(map_id: str, n: int, seed: int,
                           x0: float | None = None) -> SamplePath:
    """Orbit of the doubling ('2x mod 1') or tent map, read off a bit stream.

    Iterating 2x mod 1 directly in binary floating point shifts mantissa bits
    out and the orbit collapses to 0 within ~53 steps.  Instead the orbit is
    read from a stream of n+53 random bits, which realizes the map exactly on
    the idealized binary expansion.  A supplied x0 seeds the stream with its
    own (53-bit) expansion, so dyadic starting points give the exact finite
    orbit (in particular x0 = 0 stays at the fixed point).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if map_id not in ("doubling", "tent"):
        raise ValidationError(f"unsupported map_id {map_id!r} (use 'doubling' or 'tent')")
    length = n + _MANTISSA_BITS
    if x0 is None:
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, length).astype(np.int8)
    else:
        bits = _bits_from_float(float(x0), length)
    if map_id == "doubling":
        values = _window_values(bits, n)
    else:
        # Tent orbit: after step k the remaining digits are complemented iff the
        # previous leading bit was 1, so x_k reads window k xored with bit k-1.
        values = np.empty(n)
        values[0] = _window_values(bits[:_MANTISSA_BITS + 1], 1)[0]
        if n > 1:
            raw = _window_values(bits[1:], n - 1)
            parity = bits[:n - 1].astype(np.float64)
            # complementing all 53 window bits maps v to (1 - 2^-53) - v
            full = 1.0 - 2.0 ** -_MANTISSA_BITS
            values[1:] = np.where(parity > 0, full - raw, raw)
    return SamplePath(values=values, seed=int(seed), model_id=f"expanding_{map_id}")


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

def simulate(spec, n: int, seed: int, burn_in: int = 1000) -> SamplePath:
    """Simulate any supported model spec (burn_in only applies to IFS models)."""
    if isinstance(spec, FiniteChainSpec):
        return simulate_chain(spec, n, seed)
    if isinstance(spec, IfsSpec):
        return simulate_ifs(spec, n, burn_in, seed)
    if isinstance(spec, MaSpec):
        return simulate_ma(spec, n, seed)
    if isinstance(spec, IidSpec):
        return simulate_iid(spec, n, seed)
    raise ValidationError(f"unsupported model spec {type(spec).__name__}")
