"""Long-run covariance kernels and the limiting Gaussian field.

The limit of the sequential empirical field is a centred Gaussian process with
covariance min{s, t} * Gamma(f, g), where Gamma is the two-sided series of lag
covariances.  Three kernel routes are provided: a sample estimator (truncated
or Bartlett-weighted), the analytic i.i.d. kernel for interval indicators, and
the exact chain kernel through the fundamental matrix.  The field is sampled
on a (function x time) grid via one Cholesky factorization reused across
draws, and critical values are empirical quantiles of the sup of the pinned
bridge |K(f, t) - t K(f, 1)|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NumericError, ValidationError
from .empirical import FunctionClass
from .processes import FiniteChainSpec, SamplePath
from .spectral import fundamental_matrix

__all__ = [
    "LongRunKernel",
    "KieferModel",
    "CriticalValue",
    "estimate_longrun_kernel",
    "iid_interval_kernel",
    "chain_kernel",
    "build_kiefer",
    "sample_sup_bridge",
    "critical_value",
    "quantile_table",
    "default_lag",
]

_MAX_JITTER = 1e-6


@dataclass(frozen=True, eq=False)
class LongRunKernel:
    """Symmetric matrix Gamma(f, g) over a function grid."""

    gamma: np.ndarray
    f_labels: list
    estimator: str
    lag: int | None = None

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValidationError("gamma must be square")
        asym = np.abs(g - g.T).max() if g.size else 0.0
        if asym > 1e-10:
            raise ValidationError(f"gamma asymmetry {asym:.3e} exceeds 1e-10")
        if g.size and np.diag(g).min() < -1e-10:
            raise ValidationError("gamma has a negative diagonal entry")
        object.__setattr__(self, "gamma", (g + g.T) / 2.0)

    @property
    def size(self) -> int:
        return self.gamma.shape[0]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.gamma, delimiter=",",
                   header=",".join(self.f_labels), comments="")


def default_lag(n: int, theta: float | None = None) -> tuple[int, str]:
    """Truncation policy: geometric when a decay rate is known, Bartlett else.

    With theta available the lag 2 log(n)/log(1/theta) makes the omitted tail
    O(n^{-2}); without it a Bartlett window of bandwidth n^{1/3} is used.
    """
    if theta is not None and 0.0 < theta < 1.0:
        lag = int(np.ceil(2.0 * np.log(n) / np.log(1.0 / theta)))
        return max(lag, 1), "truncated_sum"
    if theta is not None and theta == 0.0:
        return 1, "truncated_sum"
    return max(int(np.ceil(n ** (1.0 / 3.0))), 1), "bartlett"


def estimate_longrun_kernel(paths: Sequence[SamplePath], fc: FunctionClass,
                            L: int, weights: str = "truncated_sum") -> LongRunKernel:
    """Sample estimate of Gamma from one or more stationary paths.

    Gamma_hat(f, g) = C_0(f, g) + sum_{k=1..L} w_k (C_k(f, g) + C_k(g, f))
    with C_k the lag-k cross covariance of the centered member values and
    w_k = 1 (truncated_sum) or 1 - k/(L+1) (bartlett).  Paths shorter than
    10 L are refused.
    """
    if weights not in ("truncated_sum", "bartlett"):
        raise ValidationError("weights must be 'truncated_sum' or 'bartlett'")
    if L < 0:
        raise ValidationError("L must be >= 0")
    if not paths:
        raise ValidationError("at least one path is required")
    for p in paths:
        if L > 0 and p.n < 10 * L:
            raise ValidationError(
                f"path length {p.n} too short for lag {L} (need n >= 10 L)")
    m = fc.n_members
    gamma = np.zeros((m, m))
    w = np.ones(L + 1)
    if weights == "bartlett":
        w = 1.0 - np.arange(L + 1) / (L + 1.0)
    for p in paths:
        e = fc.evaluate(p.values)
        e = e - e.mean(axis=0, keepdims=True)
        n = e.shape[0]
        acc = e.T @ e / n
        for k in range(1, L + 1):
            ck = e[:-k].T @ e[k:] / n
            acc += w[k] * (ck + ck.T)
        gamma += acc
    gamma /= len(paths)
    gamma = (gamma + gamma.T) / 2.0
    return LongRunKernel(gamma=gamma, f_labels=fc.member_labels(),
                         estimator=weights, lag=L)


def iid_interval_kernel(fc: FunctionClass,
                        cdf: Callable | None = None) -> LongRunKernel:
    """Analytic kernel for i.i.d. data and interval indicators.

    Gamma(f_x, f_y) = F(min(x, y)) - F(x) F(y); the default marginal is
    Uniform[0, 1].
    """
    if fc.kind != "interval_indicators":
        raise ValidationError("analytic i.i.d. kernel needs interval indicators")
    x = fc.params
    fx = np.clip(x, 0.0, 1.0) if cdf is None else np.asarray(cdf(x), dtype=float)
    fmin = np.minimum.outer(fx, fx)
    gamma = fmin - np.outer(fx, fx)
    return LongRunKernel(gamma=gamma, f_labels=fc.member_labels(),
                         estimator="analytic_iid")


def chain_kernel(spec: FiniteChainSpec, fc: FunctionClass) -> LongRunKernel:
    """Exact kernel for a finite chain via the fundamental matrix.

    With centered member vectors b_a over states and Z = (I - P + 1 nu)^{-1},

        Gamma(a, b) = nu(b_a * Z b_b) + nu(b_b * Z b_a) - nu(b_a * b_b),

    which sums both one-sided covariance series in closed form.
    """
    b = fc.evaluate(spec.state_values)          # (S, m)
    nu = spec.stationary
    b = b - (nu @ b)[None, :]
    z = fundamental_matrix(spec)
    weighted = b * nu[:, None]                  # (S, m)
    s1 = weighted.T @ (z @ b)                   # one-sided sums incl. lag 0
    c0 = weighted.T @ b
    gamma = s1 + s1.T - c0
    gamma = (gamma + gamma.T) / 2.0
    return LongRunKernel(gamma=gamma, f_labels=fc.member_labels(),
                         estimator="spectral_chain")


# ---------------------------------------------------------------------------
# Gaussian field on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KieferModel:
    """Covariance min{t_i, t_j} Gamma(f_a, f_b) on a grid, factorized.

    The flattened index is time-major: entry (i * m + a) is (t_i, f_a).
    """

    f_labels: list
    t_grid: np.ndarray
    gamma: np.ndarray
    cov: np.ndarray
    factor: np.ndarray
    jitter: float
    clip_magnitude: float


def build_kiefer(kernel: LongRunKernel, t_grid, jitter: float = 1e-10) -> KieferModel:
    """Assemble and factorize the grid covariance.

    Negative kernel eigenvalues (possible for sample estimates) are clipped at
    zero before assembly and the clipped magnitude is reported.  The Cholesky
    jitter starts at ``jitter`` and doubles until 1e-6; beyond that a
    NumericError carries the offending eigenvalue estimate.
    """
    t = np.asarray(t_grid, dtype=np.float64).reshape(-1)
    if t.size == 0 or (np.diff(t) <= 0).any():
        raise ValidationError("t_grid must be strictly increasing")
    if (t < 0).any() or (t > 1).any():
        raise ValidationError("t_grid must lie in [0, 1]")
    evals, evecs = np.linalg.eigh(kernel.gamma)
    clip = float(max(0.0, -evals.min(initial=0.0)))
    gamma = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
    gamma = (gamma + gamma.T) / 2.0
    cov = np.kron(np.minimum.outer(t, t), gamma)
    dim = cov.shape[0]
    j = float(jitter)
    if j <= 0:
        raise ValidationError("jitter must be positive")
    while True:
        try:
            factor = np.linalg.cholesky(cov + j * np.eye(dim))
            break
        except np.linalg.LinAlgError:
            j *= 2.0
            if j > _MAX_JITTER:
                min_eig = float(np.linalg.eigvalsh(cov).min())
                raise NumericError(
                    f"covariance factorization failed up to jitter {_MAX_JITTER}; "
                    f"smallest eigenvalue ~ {min_eig:.3e}") from None
    return KieferModel(f_labels=list(kernel.f_labels), t_grid=t, gamma=gamma,
                       cov=cov, factor=factor, jitter=j, clip_magnitude=clip)


def sample_sup_bridge(model: KieferModel, draws: int, seed: int,
                      chunk: int = 512) -> np.ndarray:
    """sup over the grid of |K(f, t) - t K(f, 1)| per Gaussian draw.

    Draw r consumes the stream seeded by (seed, r), so results do not depend
    on chunking.  The time grid must contain t = 1.
    """
    if draws < 1:
        raise ValidationError("draws must be >= 1")
    t = model.t_grid
    one = np.nonzero(np.abs(t - 1.0) <= 1e-12)[0]
    if one.size == 0:
        raise ValidationError("t_grid must contain 1.0 to pin the bridge")
    i1 = int(one[0])
    nt = t.size
    m = len(model.f_labels)
    out = np.empty(draws)
    for lo in range(0, draws, chunk):
        hi = min(lo + chunk, draws)
        z = np.empty((nt * m, hi - lo))
        for r in range(lo, hi):
            rng = np.random.default_rng(np.random.SeedSequence([int(seed), r]))
            z[:, r - lo] = rng.standard_normal(nt * m)
        field = (model.factor @ z).reshape(nt, m, hi - lo)
        bridge = field - t[:, None, None] * field[i1][None, :, :]
        out[lo:hi] = np.abs(bridge).max(axis=(0, 1))
    return out


def sample_bridge_at_one(model: KieferModel, draws: int, seed: int) -> np.ndarray:
    """Bridge values at t = 1 (identically 0 up to factorization jitter)."""
    t = model.t_grid
    i1 = int(np.nonzero(np.abs(t - 1.0) <= 1e-12)[0][0])
    m = len(model.f_labels)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    z = rng.standard_normal((model.factor.shape[0], draws))
    field = (model.factor @ z).reshape(t.size, m, draws)
    bridge = field - t[:, None, None] * field[i1][None, :, :]
    return bridge[i1].ravel()


# ---------------------------------------------------------------------------
# critical values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalValue:
    alpha: float
    value: float
    mc_se: float
    n_draws: int

    def to_record(self) -> dict:
        return {"alpha": self.alpha, "q": self.value, "mc_se": self.mc_se,
                "draws": self.n_draws}


def critical_value(draws, alpha: float) -> CriticalValue:
    """Empirical (1 - alpha)-quantile (type-7) with a binomial-bracket MC se."""
    d = np.asarray(draws, dtype=np.float64).reshape(-1)
    if d.size == 0:
        raise ValidationError("draws must be non-empty")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    value = float(np.quantile(d, 1.0 - alpha))
    srt = np.sort(d)
    n = d.size
    pos = (1.0 - alpha) * (n - 1)
    half = np.sqrt(n * alpha * (1.0 - alpha))
    lo = srt[max(0, int(np.floor(pos - half)))]
    hi = srt[min(n - 1, int(np.ceil(pos + half)))]
    return CriticalValue(alpha=float(alpha), value=value,
                         mc_se=float((hi - lo) / 2.0), n_draws=n)


def quantile_table(draws, alphas=(0.1, 0.05, 0.01)) -> list[CriticalValue]:
    return [critical_value(draws, a) for a in alphas]
