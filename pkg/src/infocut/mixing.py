"""Approximation errors of the short-time and well-mixed expansions.

For a bisection h the two errors are

    E0(t) = |(<hh'>_{2t} - (1 - 2t h^T L h)) / <hh'>_{2t}|
    E1(t) = |(I[Y;Z](t) - iota(t)) / I[Y;Z](t)|

E_inf is the suffix maximum of E1, E = max(E_inf, E0), and E* is the grid
minimum of E with t*_- / t*_+ the ends of its argmin band.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass

import numba
import numpy as np

from .diffusion import DiffusionKernel
from .errors import (
    CorrelationZeroCrossing,
    DegenerateBisection,
    InformationUnderflow,
    InvalidInput,
    SizeMismatch,
)
from .info import information_residual, joint_yz, relevance_information
from .partition import Bisection, Partition

CORRELATION_FLOOR = 1e-14
INFORMATION_FLOOR = 1e-14
ARGMIN_RTOL = 1e-9
DEFAULT_GRID = "log:1e-3:1e2:200"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Normalized times t~ = t / tau; absolute times need a kernel's tau."""

    t_tilde: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t_tilde, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise InvalidInput("time grid must be a non-empty 1-d array")
        if not np.all(np.isfinite(t)) or np.any(t <= 0):
            raise InvalidInput("time grid points must be finite and positive")
        if np.any(np.diff(t) <= 0):
            raise InvalidInput("time grid must be strictly increasing")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "t_tilde", t)

    @property
    def count(self) -> int:
        return self.t_tilde.size

    def times(self, tau: float) -> np.ndarray:
        return self.t_tilde * tau

    @classmethod
    def parse(cls, text: str) -> "TimeGrid":
        """``log:lo:hi:count`` or ``lin:lo:hi:count`` in normalized time."""
        m = re.fullmatch(r"\s*(log|lin):([^:]+):([^:]+):(\d+)\s*", text)
        if not m:
            raise InvalidInput(f"bad grid spec {text!r}; expected e.g. 'log:1e-3:1e2:200'")
        kind, lo, hi, count = m.group(1), float(m.group(2)), float(m.group(3)), int(m.group(4))
        if count < 1 or lo <= 0 or hi < lo or (count > 1 and hi == lo):
            raise InvalidInput(f"bad grid range in {text!r}")
        if kind == "log":
            pts = np.logspace(np.log10(lo), np.log10(hi), count)
        else:
            pts = np.linspace(lo, hi, count)
        return cls(pts)


def default_grid() -> TimeGrid:
    return TimeGrid.parse(DEFAULT_GRID)


@dataclass(frozen=True, eq=False)
class ErrorCurve:
    """Error curves on a grid plus the fast-mixing window statistics.

    e1/einf/e are NaN where I[Y;Z] underflowed; e0 is +inf where the
    correlation hit zero. estar is an upper bound on the continuous optimum
    because einf overestimates e1.
    """

    grid: TimeGrid
    tau: float
    e0: np.ndarray
    e1: np.ndarray
    einf: np.ndarray
    e: np.ndarray
    estar: float
    tstar_minus: float
    tstar_plus: float

    @property
    def times(self) -> np.ndarray:
        return self.grid.times(self.tau)

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "t_tilde", "e0", "e1", "einf", "e"])
        for row in zip(self.times, self.grid.t_tilde, self.e0, self.e1, self.einf, self.e):
            w.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "estar": self.estar,
            "estar_is_upper_bound": True,
            "tstar_minus": self.tstar_minus,
            "tstar_plus": self.tstar_plus,
            "tau": self.tau,
        }


def fmt(v: float) -> str:
    """17 significant digits, locale-free."""
    v = float(v)
    if np.isnan(v):
        return "nan"
    if np.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


# --- vectorized bisection core -------------------------------------------
#
# Every bisection quantity follows from the mode coefficients
# c_i = u_i . (sqrt(p) * h); c_0 = <h> exactly because u_0 = sqrt(p).


def mode_coefficients(vectors: np.ndarray, sqrt_p: np.ndarray, H: np.ndarray) -> np.ndarray:
    """c[..., v, i] for sign vectors H[..., v, n]."""
    return (H * sqrt_p[..., None, :]) @ vectors


def _decay_excess(x: np.ndarray) -> np.ndarray:
    # exp(-x) - 1 + x without cancellation
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small]
    out[small] = xs * xs * (0.5 - xs * (1 / 6 - xs * (1 / 24 - xs * (1 / 120 - xs / 720))))
    xl = x[~small]
    out[~small] = np.expm1(-xl) + xl
    return out


def e0_curves(eigenvalues: np.ndarray, c: np.ndarray, times: np.ndarray):
    """Correlation <hh'>_{2t} and E0 for each variant (rows of c) and time.

    Uses sum c_i^2 = h^T P h = 1 and sum lambda_i c_i^2 = h^T L h to write the
    numerator as a sum of exp(-x) - 1 + x terms, which is exact at t = 0.
    Returns arrays shaped (..., V, T).
    """
    x = 2.0 * times[..., :, None] * eigenvalues[..., None, :]  # (..., T, n)
    c2 = np.swapaxes(c**2, -1, -2)  # (..., n, V)
    corr = np.swapaxes(np.exp(-x) @ c2, -1, -2)
    num = np.swapaxes(_decay_excess(x) @ c2, -1, -2)
    with np.errstate(divide="ignore", invalid="ignore"):
        e0 = np.where(np.abs(corr) < CORRELATION_FLOOR, np.inf, np.abs(num / corr))
    e0 = np.where(times[..., None, :] == 0, 0.0, e0)
    return corr, e0


def e1_values(
    eigenvalues: np.ndarray,
    vectors: np.ndarray,
    sqrt_p: np.ndarray,
    c: np.ndarray,
    times: np.ndarray,
):
    """I[Y;Z], I - iota and E1 for variants c[V, n] of one graph.

    ``times`` is either shared (T,) or per variant (V, T). Returns three
    (V, T) arrays; E1 is NaN where I underflows.
    """
    hm = c[:, 0]
    if np.any(hm**2 >= 1):
        raise DegenerateBisection("a bisection puts all prior mass on one side")
    decay = np.exp(-times[..., :, None] * eigenvalues[1:])  # (V?, T, n-1)
    # v_y = <h|y> - <h>
    v = ((decay * c[:, None, 1:]) @ vectors[:, 1:].T) / sqrt_p  # (V, T, n)
    return bisection_information(v, hm, sqrt_p**2)


@numba.njit(cache=True)
def _xlog1p_pair(eta):
    if abs(eta) < 0.02:
        acc = 0.0
        for k in range(12, 2, -1):
            sign = 1.0 if k % 2 == 0 else -1.0
            acc = acc * eta + sign / (k * (k - 1))
        cubic = acc * eta * eta * eta
        return 0.5 * eta * eta + cubic, cubic
    if eta <= -1.0:
        full = 1.0
    else:
        full = (1.0 + eta) * math.log1p(eta) - eta
    return full, full - 0.5 * eta * eta


@numba.njit(cache=True)
def _information_sums(v, hm, py):
    S, T, n = v.shape
    info = np.zeros((S, T))
    resid = np.zeros((S, T))
    for s in range(S):
        ap = 0.5 * (1.0 + hm[s])
        am = 0.5 * (1.0 - hm[s])
        for t in range(T):
            acc_i = 0.0
            acc_r = 0.0
            for y in range(n):
                fp, cp = _xlog1p_pair(v[s, t, y] / (1.0 + hm[s]))
                fm, cm = _xlog1p_pair(-v[s, t, y] / (1.0 - hm[s]))
                acc_i += py[s, y] * (ap * fp + am * fm)
                acc_r += py[s, y] * (ap * cp + am * cm)
            info[s, t] = acc_i
            resid[s, t] = acc_r
    return info, resid


def bisection_information(v: np.ndarray, hm: np.ndarray, py: np.ndarray):
    """I[Y;Z], I - iota and E1 from v[S, T, n] = <h|y> - <h>.

    ``hm[S]`` is the prior mean of h and ``py`` the prior, (n,) or (S, n).
    The per-entry terms (1+eta) ln(1+eta) - eta and its cubic remainder are
    summed without forming I - iota by subtraction.
    """
    S, _, n = v.shape
    py = np.ascontiguousarray(np.broadcast_to(py, (S, n)), dtype=float)
    info, resid = _information_sums(np.ascontiguousarray(v, dtype=float), np.asarray(hm, dtype=float), py)
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = np.where(info < INFORMATION_FLOOR, np.nan, np.abs(resid / info))
    return info, resid, e1


def error_einf(e1) -> np.ndarray:
    """Suffix maximum of E1 along the last axis, skipping NaN (missing) points."""
    e1 = np.asarray(e1, dtype=float)
    return np.flip(np.fmax.accumulate(np.flip(e1, -1), axis=-1), -1)


def window_stats(e: np.ndarray, t_tilde: np.ndarray) -> tuple[float, float, float]:
    """(E*, t*_-, t*_+) from an envelope curve; NaN points are ignored."""
    if np.all(np.isnan(e)):
        raise InformationUnderflow("no grid point has a defined error envelope")
    estar = float(np.nanmin(e))
    band = np.flatnonzero(e <= estar * (1 + ARGMIN_RTOL))
    return estar, float(t_tilde[band[0]]), float(t_tilde[band[-1]])


def assemble_curve(grid: TimeGrid, tau: float, e0: np.ndarray, e1: np.ndarray) -> ErrorCurve:
    einf = error_einf(e1)
    e = np.maximum(einf, e0)
    estar, lo, hi = window_stats(e, grid.t_tilde)
    return ErrorCurve(grid, tau, e0, e1, einf, e, estar, lo, hi)


# --- public pointwise and curve API ---------------------------------------


def _bisection_coefficients(k: DiffusionKernel, b: Bisection) -> np.ndarray:
    if b.n != k.graph.n:
        raise SizeMismatch(f"bisection covers {b.n} nodes, graph has {k.graph.n}")
    return mode_coefficients(k.vectors, k.sqrt_p, b.h[None, :].astype(float))


def error_e0(k: DiffusionKernel, b: Bisection, t: float) -> float:
    """Relative error of <hh'>_{2t} ~ 1 - 2t h^T L h."""
    if t < 0:
        raise InvalidInput(f"diffusion time must be nonnegative, got {t}")
    c = _bisection_coefficients(k, b)
    corr, e0 = e0_curves(k.eigenvalues, c, np.array([float(t)]))
    if abs(corr[0, 0]) < CORRELATION_FLOOR:
        raise CorrelationZeroCrossing(f"<hh'> = {corr[0, 0]:.3g} at t={t}")
    return float(e0[0, 0])


def error_e1(k: DiffusionKernel, p: Partition, t: float) -> float:
    """Relative error of I[Y;Z] ~ iota, evaluated through the joint distribution."""
    j = joint_yz(k, p, t)
    info = relevance_information(j)
    if info < INFORMATION_FLOOR:
        raise InformationUnderflow(f"I[Y;Z] = {info:.3g} at t={t}")
    return abs(information_residual(j) / info)


def fast_mixing_stats(k: DiffusionKernel, b: Bisection, grid: TimeGrid | None = None) -> ErrorCurve:
    grid = grid or default_grid()
    c = _bisection_coefficients(k, b)
    times = grid.times(k.tau)
    _, e0 = e0_curves(k.eigenvalues, c, times)
    _, _, e1 = e1_values(k.eigenvalues, k.vectors, k.sqrt_p, c, times)
    return assemble_curve(grid, k.tau, e0[0], e1[0])
