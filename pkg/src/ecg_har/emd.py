"""Empirical Mode Decomposition by envelope-mean sifting.

Each intrinsic mode function (IMF) is extracted by iteratively subtracting
the mean of the cubic-spline upper/lower envelopes until the Cauchy SD
criterion falls below a threshold; the extracted IMF is removed from the
running residual and sifting continues on what is left. IMF1 carries the
highest-frequency content. Envelope end effects are controlled by mirroring
two extrema beyond each boundary before spline fitting.
"""
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DecompositionDegenerateError, NonFiniteSignalError, TooShortError

MIN_EMD_LENGTH = 16


@dataclass(frozen=True)
class EmdConfig:
    sd_threshold: float = 0.2
    max_siftings: int = 100
    boundary_extrema: int = 2  # mirrored extrema per end


@dataclass(frozen=True)
class LeadDecomposition:
    """IMFs plus residual for a single lead; zero-padded if the signal ran out
    of oscillatory modes before the requested count (num_genuine < num IMFs)."""

    imfs: np.ndarray  # (num_imfs, n)
    residual: np.ndarray  # (n,)
    num_genuine: int

    @property
    def padded(self) -> bool:
        return self.num_genuine < self.imfs.shape[0]


def local_extrema(x: np.ndarray):
    """Indices of local maxima and minima; plateaus count once, at their end."""
    d = np.diff(x)
    s = np.sign(d)
    nz = s != 0
    if not nz.any():
        return np.array([], dtype=int), np.array([], dtype=int)
    # forward-fill zero signs so plateaus inherit the preceding slope
    idx = np.where(nz, np.arange(s.size), 0)
    np.maximum.accumulate(idx, out=idx)
    sf = s[idx]
    interior = np.arange(1, x.size - 1)
    maxima = interior[(sf[:-1][interior - 1] > 0) & (s[interior] < 0)]
    minima = interior[(sf[:-1][interior - 1] < 0) & (s[interior] > 0)]
    return maxima, minima


def _mirrored_knots(idx: np.ndarray, vals: np.ndarray, n: int, nbsym: int):
    """Extend extrema beyond [0, n-1] by mirror reflection at both ends."""
    k = min(nbsym, idx.size)
    left_t = -idx[:k][::-1]
    left_v = vals[:k][::-1]
    right_t = 2 * (n - 1) - idx[-k:][::-1]
    right_v = vals[-k:][::-1]
    t = np.concatenate([left_t, idx, right_t])
    v = np.concatenate([left_v, vals, right_v])
    keep = np.concatenate([[True], np.diff(t) > 0])
    return t[keep], v[keep]


def _envelope_mean(x: np.ndarray, nbsym: int):
    """Mean of the upper and lower cubic-spline envelopes, or None if the
    signal no longer has two maxima and two minima."""
    mx, mn = local_extrema(x)
    if mx.size < 2 or mn.size < 2:
        return None
    n = x.size
    grid = np.arange(n)
    tu, vu = _mirrored_knots(mx, x[mx], n, nbsym)
    tl, vl = _mirrored_knots(mn, x[mn], n, nbsym)
    upper = CubicSpline(tu, vu)(grid)
    lower = CubicSpline(tl, vl)(grid)
    return 0.5 * (upper + lower)


def _extract_imf(r: np.ndarray, cfg: EmdConfig):
    """Sift one IMF out of the residual, or return None if none is left."""
    h = r
    mean = _envelope_mean(h, cfg.boundary_extrema)
    if mean is None:
        return None
    for _ in range(cfg.max_siftings):
        h_new = h - mean
        denom = float(np.sum(h * h))
        sd = float(np.sum((h - h_new) ** 2)) / (denom + 1e-300)
        h = h_new
        if sd < cfg.sd_threshold:
            break
        mean = _envelope_mean(h, cfg.boundary_extrema)
        if mean is None:
            break
    return h


def emd(signal, num_imfs: int = 8, config: EmdConfig | None = None) -> LeadDecomposition:
    """Decompose a 1-D signal into `num_imfs` IMFs plus a residual.

    The returned modes satisfy signal == sum(imfs) + residual exactly up to
    floating-point accumulation. Raises DecompositionDegenerateError when the
    input has fewer than two maxima and two minima, and TooShortError below
    MIN_EMD_LENGTH samples.
    """
    cfg = config or EmdConfig()
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("signal must be 1-D")
    if x.size < MIN_EMD_LENGTH:
        raise TooShortError(x.size, MIN_EMD_LENGTH)
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise NonFiniteSignalError(int(bad[0]))
    mx, mn = local_extrema(x)
    if mx.size < 2 or mn.size < 2:
        raise DecompositionDegenerateError(
            f"need >= 2 maxima and >= 2 minima, found {mx.size} and {mn.size}"
        )

    imfs = np.zeros((num_imfs, x.size), dtype=np.float64)
    r = x.copy()
    genuine = 0
    for k in range(num_imfs):
        imf = _extract_imf(r, cfg)
        if imf is None:
            break
        imfs[k] = imf
        r = r - imf
        genuine += 1
    return LeadDecomposition(imfs=imfs, residual=r, num_genuine=genuine)
