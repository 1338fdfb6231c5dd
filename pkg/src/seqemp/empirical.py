"""Sequential empirical fields and the CUSUM-type change-point statistic.

For a path X_1..X_n and a function f the partial-sum fluctuation field is

    U_n(f, t) = n^{-1/2} * sum_{i <= [nt]} (f(X_i) - mu_f),

the two-sided comparison field is

    R_n(f, t) = sqrt(n) * ([nt]/n) * ((n-[nt])/n) * (F_[nt](f) - F_[nt]+1,n(f))

with the conventions F_0 = F_{n+1,n} = 0, and the change-point statistic is
the maximum of |R_n| over all split points and the function grid.

Evaluation streams over the path in blocks, keeping memory proportional to
the function grid rather than to n * grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .processes import SamplePath

__all__ = [
    "FunctionClass",
    "SeqField",
    "CusumResult",
    "sequential_empirical",
    "r_field",
    "cusum_statistic",
    "sup_r_field",
    "r_sup_batch",
    "cusum_batch",
]

_KINDS = ("interval_indicators", "rectangle_indicators",
          "ellipsoid_indicators", "holder_smoothed")

_CHUNK = 8192


# ---------------------------------------------------------------------------
# function classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FunctionClass:
    """A finite, evaluable grid of indexing functions.

    kind / params layout:
      interval_indicators   params (m,)        f_x(y) = 1{y <= x}
      rectangle_indicators  params (m, 2, d)   f(y) = 1{lo < y <= hi} componentwise
      ellipsoid_indicators  params (m, 2, d)   rows are (center, radii)
      holder_smoothed       params (m, 2)      ramp: 1 until x, linear to 0 at x+w
    """

    kind: str
    params: np.ndarray
    sup_bound: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown function class kind {self.kind!r}")
        p = np.asarray(self.params, dtype=np.float64)
        if self.kind == "interval_indicators":
            if p.ndim != 1 or p.size < 1:
                raise ValidationError("interval indicators need a 1-d threshold grid")
        elif self.kind in ("rectangle_indicators", "ellipsoid_indicators"):
            if p.ndim != 3 or p.shape[1] != 2 or p.shape[0] < 1:
                raise ValidationError(f"{self.kind} needs params of shape (m, 2, d)")
            if self.kind == "rectangle_indicators" and (p[:, 0] > p[:, 1]).any():
                raise ValidationError("rectangle corners must satisfy lo <= hi")
            if self.kind == "ellipsoid_indicators" and (p[:, 1] <= 0).any():
                raise ValidationError("ellipsoid radii must be positive")
        else:
            if p.ndim != 2 or p.shape[1] != 2 or (p[:, 1] <= 0).any():
                raise ValidationError("holder_smoothed needs (m, 2) rows (x, width>0)")
        if self.sup_bound <= 0:
            raise ValidationError("sup_bound must be positive")
        object.__setattr__(self, "params", p)

    @property
    def n_members(self) -> int:
        return self.params.shape[0]

    @property
    def dim(self) -> int:
        if self.kind in ("interval_indicators", "holder_smoothed"):
            return 1
        return self.params.shape[2]

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """(n_points, n_members) matrix of member values."""
        pts = np.asarray(points, dtype=np.float64)
        if self.dim == 1:
            pts = pts.reshape(-1)
        else:
            pts = pts.reshape(-1, self.dim)
        if self.kind == "interval_indicators":
            return (pts[:, None] <= self.params[None, :]).astype(np.float64)
        if self.kind == "rectangle_indicators":
            lo = self.params[:, 0]  # (m, d)
            hi = self.params[:, 1]
            inside = (pts[:, None, :] > lo[None]) & (pts[:, None, :] <= hi[None])
            return inside.all(axis=2).astype(np.float64)
        if self.kind == "ellipsoid_indicators":
            c = self.params[:, 0]
            r = self.params[:, 1]
            z = (pts[:, None, :] - c[None]) / r[None]
            return ((z * z).sum(axis=2) <= 1.0).astype(np.float64)
        x = self.params[:, 0]
        w = self.params[:, 1]
        return np.clip((x[None, :] + w[None, :] - pts[:, None]) / w[None, :], 0.0, 1.0)

    def evaluate_member(self, index: int, points: np.ndarray) -> np.ndarray:
        """Values of one member at the given points."""
        sub = FunctionClass(self.kind, self.params[index:index + 1],
                            sup_bound=self.sup_bound)
        return sub.evaluate(points)[:, 0]

    def member_labels(self) -> list[str]:
        if self.kind == "interval_indicators":
            return [f"x={v:.10g}" for v in self.params]
        if self.kind == "holder_smoothed":
            return [f"x={a:.10g};w={b:.10g}" for a, b in self.params]
        return [";".join(f"{v:.10g}" for v in row.ravel()) for row in self.params]

    @staticmethod
    def interval_grid(lo: float, hi: float, count: int) -> "FunctionClass":
        return FunctionClass("interval_indicators", np.linspace(lo, hi, count))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SeqField:
    """Field values on (function grid) x (time grid)."""

    values: np.ndarray          # (n_members, n_times)
    f_labels: list
    t_grid: np.ndarray
    n: int
    centering: np.ndarray | None  # mu_f used, None if not applicable

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("f_param,t,value\n")
            for a, label in enumerate(self.f_labels):
                safe = '"%s"' % label.replace('"', '""') if "," in label else label
                for j, t in enumerate(self.t_grid):
                    fh.write(f"{safe},{t:.12g},{self.values[a, j]:.17g}\n")


def _floor_nt(n: int, t_grid: np.ndarray) -> np.ndarray:
    """[n t] with a snap tolerance so t = k/n never floors to k - 1."""
    prod = n * t_grid
    k = np.floor(prod)
    k = np.where(prod - k >= 1.0 - 1e-9, k + 1.0, k)
    return k.astype(np.int64)


def _validate_t_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=np.float64).reshape(-1)
    if t.size == 0:
        raise ValidationError("time grid is empty")
    if (t < 0).any() or (t > 1).any():
        raise ValidationError("time grid must lie in [0, 1]")
    return t


def _partial_sums_at(values: np.ndarray, fc: FunctionClass,
                     ks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Streaming S_k = sum_{i<=k} f(X_i) for the requested k plus the full sum.

    Returns (sums at sorted unique k, total S_n); one block of the path is
    evaluated at a time.
    """
    n = values.shape[0]
    m = fc.n_members
    uniq = np.unique(ks)
    out = np.zeros((uniq.size, m))
    running = np.zeros(m)
    pos = 0
    nxt = 0
    while uniq.size > nxt and uniq[nxt] == 0:
        nxt += 1  # S_0 = 0 rows already in place
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        block = fc.evaluate(values[lo:hi])
        csum = np.cumsum(block, axis=0)
        while nxt < uniq.size and uniq[nxt] <= hi:
            out[nxt] = running + csum[uniq[nxt] - lo - 1]
            nxt += 1
        running += csum[-1]
        pos = hi
        if nxt >= uniq.size and pos < n:
            # still need the total
            for lo2 in range(pos, n, _CHUNK):
                hi2 = min(lo2 + _CHUNK, n)
                running += fc.evaluate(values[lo2:hi2]).sum(axis=0)
            break
    return out[np.searchsorted(uniq, ks)], running


def sequential_empirical(path: SamplePath, fc: FunctionClass, t_grid,
                         mu_f) -> SeqField:
    """U_n(f, t) on the grid, centered at the supplied per-function means."""
    t = _validate_t_grid(t_grid)
    mu = np.asarray(mu_f, dtype=np.float64).reshape(-1)
    if mu.size != fc.n_members:
        raise ValidationError("mu_f must supply one mean per function")
    n = path.n
    ks = _floor_nt(n, t)
    sums, _ = _partial_sums_at(path.values, fc, ks)
    vals = (sums - ks[:, None] * mu[None, :]) / np.sqrt(n)
    return SeqField(values=vals.T, f_labels=fc.member_labels(), t_grid=t,
                    n=n, centering=mu)


def r_field(path: SamplePath, fc: FunctionClass, t_grid) -> SeqField:
    """Two-sided field from the defining formula (no centering needed)."""
    t = _validate_t_grid(t_grid)
    n = path.n
    ks = _floor_nt(n, t)
    sums, total = _partial_sums_at(path.values, fc, ks)
    vals = np.zeros((t.size, fc.n_members))
    interior = (ks > 0) & (ks < n)
    ki = ks[interior].astype(np.float64)
    front = sums[interior] / ki[:, None]
    back = (total[None, :] - sums[interior]) / (n - ki)[:, None]
    weight = np.sqrt(n) * (ki / n) * ((n - ki) / n)
    vals[interior] = weight[:, None] * (front - back)
    return SeqField(values=vals.T, f_labels=fc.member_labels(), t_grid=t,
                    n=n, centering=None)


def sup_r_field(path: SamplePath, fc: FunctionClass, t_grid) -> float:
    """max over the grid of |R_n|; the grid-restricted statistic."""
    return float(np.abs(r_field(path, fc, t_grid).values).max())


# ---------------------------------------------------------------------------
# change-point statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CusumResult:
    """Maximal weighted two-sample discrepancy over splits and functions."""

    statistic: float
    argmax_k: int
    argmax_f: str
    n: int
    class_kind: str

    def __float__(self):
        return self.statistic

    def to_record(self) -> dict:
        return {"n": self.n, "class": self.class_kind, "T_n": self.statistic,
                "argmax_k": self.argmax_k, "argmax_f": self.argmax_f}


def cusum_statistic(path: SamplePath, fc: FunctionClass,
                    exact_intervals: bool = False) -> CusumResult:
    """Maximum over every split k = 0..n and the function grid.

    Uses the exact identity R_n(f, k/n) = (S_k - (k/n) S_n)/sqrt(n), in which
    the centering cancels.  With ``exact_intervals`` the threshold grid is
    replaced by the sample's own order statistics, which attain the supremum
    over all real thresholds for indicator classes on scalar data.
    """
    if exact_intervals:
        if fc.kind != "interval_indicators" or path.values.ndim != 1:
            raise ValidationError(
                "exact_intervals requires interval indicators on scalar paths")
        fc = FunctionClass("interval_indicators", np.unique(path.values))
    n = path.n
    m = fc.n_members
    # pass 1: totals
    total = np.zeros(m)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        total += fc.evaluate(path.values[lo:hi]).sum(axis=0)
    # pass 2: running max of |S_k - (k/n) S_n|
    best = -1.0
    best_k = 0
    best_f = 0
    running = np.zeros(m)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        csum = running + np.cumsum(fc.evaluate(path.values[lo:hi]), axis=0)
        ks = np.arange(lo + 1, hi + 1, dtype=np.float64)
        dev = np.abs(csum - (ks / n)[:, None] * total[None, :])
        idx = int(np.argmax(dev))
        if dev.flat[idx] > best:
            best = dev.flat[idx]
            best_k = lo + 1 + idx // m
            best_f = idx % m
        running = csum[-1]
    stat = best / np.sqrt(n)
    if stat <= 0.0:
        stat, best_k, best_f = 0.0, 0, 0
    return CusumResult(statistic=float(stat), argmax_k=int(best_k),
                       argmax_f=fc.member_labels()[best_f], n=n,
                       class_kind=fc.kind)


# ---------------------------------------------------------------------------
# replication batches
# ---------------------------------------------------------------------------

def r_sup_batch(values: np.ndarray, fc: FunctionClass, t_grid) -> np.ndarray:
    """Grid-restricted sup|R_n| for a (reps, n) matrix of scalar paths.

    Vectorized across replicates, one function at a time; this is the
    workhorse behind null-calibration runs.
    """
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 2:
        raise ValidationError("values must be a (reps, n) matrix")
    reps, n = vals.shape
    t = _validate_t_grid(t_grid)
    ks = _floor_nt(n, t)
    ks = ks[(ks > 0) & (ks <= n)]
    best = np.zeros(reps)
    if ks.size == 0:
        return best
    for a in range(fc.n_members):
        col = fc.evaluate_member(a, vals.reshape(-1)).reshape(reps, n)
        csum = np.cumsum(col, axis=1)
        total = csum[:, -1]
        sk = csum[:, ks - 1]
        dev = np.abs(sk - (ks / n)[None, :] * total[:, None])
        best = np.maximum(best, dev.max(axis=1))
    return best / np.sqrt(n)


def cusum_batch(values: np.ndarray, fc: FunctionClass) -> np.ndarray:
    """Exact T_n (max over all splits) for a (reps, n) matrix of scalar paths."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 2:
        raise ValidationError("values must be a (reps, n) matrix")
    reps, n = vals.shape
    k_over_n = np.arange(1, n + 1, dtype=np.float64) / n
    best = np.zeros(reps)
    for a in range(fc.n_members):
        col = fc.evaluate_member(a, vals.reshape(-1)).reshape(reps, n)
        csum = np.cumsum(col, axis=1)
        total = csum[:, -1]
        dev = np.abs(csum - k_over_n[None, :] * total[:, None])
        best = np.maximum(best, dev.max(axis=1))
    return best / np.sqrt(n)
