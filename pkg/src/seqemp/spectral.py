"""Transfer-operator numerics for finite-state chains.

The phase-perturbed operator M(t)[x, y] = P[x, y] * exp(i t f(y)) encodes the
fluctuation behaviour of partial sums of f along the chain: for centered f its
leading eigenvalue expands as 1 - t^2 sigma^2 / 2 + o(t^2), where sigma^2 is
the asymptotic variance of n^{-1/2} S_n(f).  This module extracts sigma^2 both
from that curvature and from the exact lag-covariance series, computes
geometric ergodicity constants (kappa, theta), and tabulates covariance-decay
ratios against the geometric envelope theta^k.

State counts are assumed moderate (<= ~10^3); everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ValidationError
from .processes import FiniteChainSpec
from .rng import stream

__all__ = [
    "PerturbedOperator",
    "SpectralReport",
    "perturbed_operator",
    "leading_eigen",
    "second_modulus",
    "sigma2_from_eigen",
    "sigma2_eigen_report",
    "sigma2_from_series",
    "ergodicity_rate",
    "covariance_decay_check",
    "spectral_report",
    "fundamental_matrix",
]

DEFAULT_H_GRID = (0.1, 0.05, 0.025, 0.0125)

_CENTER_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PerturbedOperator:
    """P composed with the phase e^{i t f}; equals P exactly at t = 0."""

    base: FiniteChainSpec
    f: np.ndarray
    t: float
    matrix: np.ndarray


def perturbed_operator(spec: FiniteChainSpec, f, t: float) -> PerturbedOperator:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (spec.n_states,):
        raise ValidationError("f must assign one real value per state")
    phase = np.exp(1j * t * f)
    matrix = spec.transition.astype(np.complex128) * phase[None, :]
    return PerturbedOperator(base=spec, f=f, t=float(t), matrix=matrix)


# ---------------------------------------------------------------------------
# eigenvalues by power iteration
# ---------------------------------------------------------------------------

def _power_dominant(m: np.ndarray, v0: np.ndarray, tol: float = 1e-13,
                    maxiter: int = 200_000):
    """Dominant eigenvalue via power iteration with a Rayleigh quotient.

    Returns (lam, v, converged).  A vanishing iterate means the matrix is
    (numerically) nilpotent in the explored subspace; that reports lam = 0.
    """
    v = v0 / np.linalg.norm(v0)
    lam = 0.0 + 0.0j
    hits = 0
    for _ in range(maxiter):
        w = m @ v
        norm_w = np.linalg.norm(w)
        if norm_w < 1e-280:
            return 0.0 + 0.0j, v, True
        lam_new = np.vdot(v, w)  # Rayleigh quotient, v normalized
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            hits += 1
            if hits >= 3:
                return lam_new, w / norm_w, True
        else:
            hits = 0
        lam = lam_new
        v = w / norm_w
    return lam, v, False


def _modulus_estimate(m: np.ndarray, v0: np.ndarray, iters: int = 400) -> float:
    """Spectral-radius estimate by norm growth; robust to equal-modulus pairs."""
    v = v0 / np.linalg.norm(v0)
    growth = []
    for i in range(iters):
        w = m @ v
        norm_w = np.linalg.norm(w)
        if norm_w < 1e-280:
            return 0.0
        if i >= iters - 50:
            growth.append(norm_w)
        v = w / norm_w
    return float(np.exp(np.mean(np.log(growth))))


def _start_vector(s: int) -> np.ndarray:
    v = np.ones(s, dtype=np.complex128)
    if s > 1:
        # break symmetry so a start orthogonal to the dominant mode is unlikely
        v += 1e-3 * np.arange(s) / s
    return v


def leading_eigen(op: PerturbedOperator, gap_tol: float = 1e-8) -> complex:
    """Dominant eigenvalue, with a deflation check of the spectral gap.

    Raises NumericError when |lam_1| - |lam_2| <= gap_tol (no separated
    dominant eigenvalue) or when the iteration fails to converge.
    """
    lam1, lam2 = leading_pair(op, gap_tol=gap_tol)
    return lam1


def leading_pair(op: PerturbedOperator, gap_tol: float = 1e-8):
    m = op.matrix
    s = m.shape[0]
    v0 = _start_vector(s)
    lam1, v1, ok = _power_dominant(m, v0)
    if not ok:
        r1 = _modulus_estimate(m, v0)
        raise NumericError(
            f"power iteration did not converge; spectral radius ~ {r1:.6g}, "
            "dominant eigenvalue may not be separated")
    if lam1 == 0:
        return 0.0 + 0.0j, 0.0 + 0.0j
    # left eigenvector via the adjoint, then deflate the dominant pair
    _, w1, ok_left = _power_dominant(m.conj().T, v0)
    if not ok_left:
        raise NumericError("adjoint power iteration did not converge")
    denom = np.vdot(w1, v1)
    if abs(denom) < 1e-14:
        raise NumericError("dominant eigenvalue appears defective")
    deflated = m - lam1 * np.outer(v1, w1.conj()) / denom
    mod2 = _modulus_estimate(deflated, _start_vector(s))
    gap = abs(lam1) - mod2
    if gap <= gap_tol:
        raise NumericError(
            f"spectral gap collapse: |lam1| = {abs(lam1):.12g}, "
            f"|lam2| = {mod2:.12g}")
    return lam1, mod2 * np.exp(1j * 0)


def second_modulus(spec: FiniteChainSpec) -> float:
    """|lambda_2| of the transition matrix (dense eigenvalues)."""
    ev = np.linalg.eigvals(spec.transition)
    mods = np.sort(np.abs(ev))[::-1]
    return float(mods[1]) if mods.size > 1 else 0.0


# ---------------------------------------------------------------------------
# asymptotic variance, two routes
# ---------------------------------------------------------------------------

def _require_centered(spec: FiniteChainSpec, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (spec.n_states,):
        raise ValidationError("f must assign one real value per state")
    nuf = float(spec.stationary @ f)
    if abs(nuf) > _CENTER_TOL:
        raise ValidationError(
            f"f must be centered: stationary mean is {nuf:.6e}; subtract it first")
    return f


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    """Curvature extraction of sigma^2 with its residual diagnostics."""

    value: float
    h_grid: np.ndarray
    raw: np.ndarray            # 2 (1 - Re lam_h) / h^2 per h
    residuals: np.ndarray      # |lam_h - (1 - h^2 value / 2)| / h^2
    imag_drift: np.ndarray     # Im lam_h, ~0 for centered f


def sigma2_eigen_report(spec: FiniteChainSpec, f,
                        h_grid=DEFAULT_H_GRID) -> CurvatureReport:
    f = _require_centered(spec, f)
    h = np.asarray(h_grid, dtype=np.float64)
    if h.ndim != 1 or h.size < 1:
        raise ValidationError("h_grid must be a non-empty 1-d array")
    if (h <= 0).any() or (h > 0.1 + 1e-15).any():
        raise ValidationError("h_grid must lie in (0, 0.1]")
    h = np.sort(h)[::-1]
    lams = np.array([leading_eigen(perturbed_operator(spec, f, hi)) for hi in h])
    raw = 2.0 * (1.0 - lams.real) / h ** 2
    # Re lam is even in t, so the error series runs in h^2; fit a low-order
    # polynomial in h^2 and read off the constant term (Richardson-style).
    deg = min(h.size - 1, 2)
    coeffs = np.polynomial.polynomial.polyfit(h ** 2, raw, deg)
    value = float(coeffs[0])
    residuals = np.abs(lams - (1.0 - h ** 2 * value / 2.0)) / h ** 2
    return CurvatureReport(value=value, h_grid=h, raw=raw,
                           residuals=residuals, imag_drift=lams.imag)


def sigma2_from_eigen(spec: FiniteChainSpec, f, h_grid=DEFAULT_H_GRID) -> float:
    return sigma2_eigen_report(spec, f, h_grid).value


def sigma2_from_series(spec: FiniteChainSpec, f, L: int | None = None,
                       return_tail: bool = False):
    """sigma^2 = nu(f^2) + 2 sum_{k>=1} Cov(f(X_0), f(X_k)), exact matrices.

    The series is summed to L with the geometric tail bound reported
    (2 C theta^{L+1} / (1 - theta) with C the last computed |Cov| over
    theta^k).  L defaults to the smallest lag that pushes the bound below
    1e-13.
    """
    f = _require_centered(spec, f)
    nu = spec.stationary
    p = spec.transition
    theta = second_modulus(spec)
    if L is None:
        if theta < 1e-12:
            L = 2
        else:
            L = int(np.ceil(np.log(1e-15) / np.log(theta))) + 1
            L = min(max(L, 8), 100_000)
    if L < 1:
        raise ValidationError("L must be >= 1")
    var0 = float(nu @ (f * f))
    total = var0
    v = f.copy()
    last_ratio = 0.0
    for k in range(1, L + 1):
        v = p @ v
        cov_k = float(nu @ (f * v))
        total += 2.0 * cov_k
        tk = theta ** k
        if tk > 0:
            last_ratio = max(last_ratio, abs(cov_k) / tk)
    tail = 0.0
    if theta > 0 and theta < 1:
        tail = 2.0 * last_ratio * theta ** (L + 1) / (1.0 - theta)
    if return_tail:
        return float(total), float(tail)
    return float(total)


# ---------------------------------------------------------------------------
# ergodicity constants and covariance decay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErgodicityRate:
    kappa: float
    theta: float


def _default_probes(s: int, extra: int = 16) -> list[np.ndarray]:
    probes = [np.eye(s)[i] for i in range(s)]
    rng = stream(0, "ergodicity-probes")
    for _ in range(extra):
        probes.append(rng.integers(0, 2, s).astype(np.float64) * 2.0 - 1.0)
    return probes


def ergodicity_rate(spec: FiniteChainSpec, probes=None,
                    n_max: int = 100) -> ErgodicityRate:
    """theta = |lambda_2|; kappa fitted as the max over probes and n <= n_max
    of ||P^n f - (nu f) 1||_inf / (||f||_inf theta^n).

    Ratios are skipped once theta^n underflows or the numerator sits at the
    rounding floor, so rank-one chains report the n = 0 constant.
    """
    theta = second_modulus(spec)
    if theta >= 1.0 - 1e-10:
        raise NumericError(
            f"|lambda_2| = {theta:.12g}: chain is periodic or reducible")
    if probes is None:
        probes = _default_probes(spec.n_states)
    nu = spec.stationary
    p = spec.transition
    kappa = 0.0
    for f in probes:
        f = np.asarray(f, dtype=np.float64)
        norm_f = np.abs(f).max()
        if norm_f == 0:
            continue
        mean = float(nu @ f)
        v = f.copy()
        kappa = max(kappa, np.abs(v - mean).max() / norm_f)  # n = 0 term
        for n in range(1, n_max + 1):
            v = p @ v
            num = np.abs(v - mean).max()
            denom = theta ** n if theta > 0 else 0.0
            if denom < 1e-280 or num < 1e-13 * norm_f:
                break
            kappa = max(kappa, num / (norm_f * denom))
    return ErgodicityRate(kappa=float(kappa), theta=theta)


@dataclass(frozen=True, eq=False)
class DecayReport:
    """Lag covariances against the geometric envelope theta^k."""

    lags: np.ndarray
    covariances: np.ndarray
    ratios: np.ndarray
    theta: float
    norm_g_s: float
    norm_f_sup: float
    fitted_c: float
    passed: bool

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("k,cov,ratio\n")
            for k, c, r in zip(self.lags, self.covariances, self.ratios):
                fh.write(f"{k},{c:.17g},{r:.17g}\n")


def covariance_decay_check(spec: FiniteChainSpec, f, g, s: float = 1.0,
                           kmax: int = 50) -> DecayReport:
    """Table of |Cov(g(X_0), f(X_k))| / (||g||_s ||f||_sup theta^k), k <= kmax.

    Covariances are exact matrix evaluations under stationarity.  Entries
    whose covariance sits at the rounding floor get ratio 0; the fitted
    constant is the max of the remaining ratios.
    """
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != (spec.n_states,) or g.shape != (spec.n_states,):
        raise ValidationError("f and g must assign one value per state")
    if s < 1:
        raise ValidationError("s must be >= 1")
    nu = spec.stationary
    p = spec.transition
    theta = second_modulus(spec)
    fc = f - float(nu @ f)
    gc = g - float(nu @ g)
    norm_g = float((nu @ np.abs(g) ** s) ** (1.0 / s))
    norm_f = float(np.abs(f).max())
    scale = max(norm_g * norm_f, 1e-300)
    floor = 1e-15 * max(float(nu @ np.abs(gc) * np.abs(fc).max()), 1e-300)
    lags, covs, ratios = [], [], []
    v = fc.copy()
    for k in range(0, kmax + 1):
        if k > 0:
            v = p @ v
        cov_k = float(nu @ (gc * v))
        lags.append(k)
        covs.append(cov_k)
        denom = theta ** k if theta > 0 else (1.0 if k == 0 else 0.0)
        if abs(cov_k) <= floor:
            ratios.append(0.0)
        elif denom < 1e-280:
            ratios.append(np.inf)
        else:
            ratios.append(abs(cov_k) / (scale * denom))
    ratios = np.array(ratios)
    fitted = float(ratios[np.isfinite(ratios)].max(initial=0.0))
    passed = bool(np.isfinite(ratios).all())
    return DecayReport(lags=np.array(lags), covariances=np.array(covs),
                       ratios=ratios, theta=theta, norm_g_s=norm_g,
                       norm_f_sup=norm_f, fitted_c=fitted, passed=passed)


# ---------------------------------------------------------------------------
# combined report and helpers
# ---------------------------------------------------------------------------

def fundamental_matrix(spec: FiniteChainSpec) -> np.ndarray:
    """(I - P + 1 nu)^{-1}; applied to centered functions it sums P^k."""
    s = spec.n_states
    one_nu = np.outer(np.ones(s), spec.stationary)
    return np.linalg.inv(np.eye(s) - spec.transition + one_nu)


@dataclass(frozen=True, eq=False)
class SpectralReport:
    lam: complex          # leading eigenvalue at t = 0 (1 for stochastic P)
    gap: float            # |lam_1| - |lam_2|
    sigma2: float
    theta: float
    kappa: float

    def to_record(self) -> dict:
        return {
            "lambda": {"re": self.lam.real, "im": self.lam.imag},
            "gap": self.gap,
            "sigma2": self.sigma2,
            "theta": self.theta,
            "kappa": self.kappa,
        }


def spectral_report(spec: FiniteChainSpec, f,
                    h_grid=DEFAULT_H_GRID) -> SpectralReport:
    """Full report for a chain and a (not necessarily centered) observable."""
    f = np.asarray(f, dtype=np.float64)
    fc = f - float(spec.stationary @ f)
    lam0 = leading_eigen(perturbed_operator(spec, fc, 0.0))
    rate = ergodicity_rate(spec)
    sigma2 = sigma2_from_eigen(spec, fc, h_grid)
    return SpectralReport(lam=lam0, gap=1.0 - rate.theta, sigma2=sigma2,
                          theta=rate.theta, kappa=rate.kappa)
