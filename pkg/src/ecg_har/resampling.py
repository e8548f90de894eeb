"""Rational polyphase resampling with a Kaiser-windowed sinc anti-alias filter.

512 Hz -> 50 Hz reduces to up=25 / down=256. The signal is conceptually
upsampled by `up`, low-pass filtered at the smaller Nyquist frequency, and
decimated by `down`; `scipy.signal.upfirdn` performs the polyphase
computation without materializing the upsampled signal.

Output length rule: floor(len(x) * up / down). The FIR group delay is a
whole multiple of `down` high-rate samples, so alignment is exact: output
sample m sits at input time m * down / up samples.
"""
from functools import lru_cache
from math import gcd

import numpy as np
from scipy import signal as _sig

from .errors import InvalidArgumentError, NonFiniteSignalError

# 80 dB stopband attenuation target for the anti-alias filter.
_KAISER_BETA = 0.1102 * (80.0 - 8.7)
# FIR half-length in units of `down` high-rate samples (keeps delay integral).
_HALF_BLOCKS = 8


@lru_cache(maxsize=None)
def _antialias_fir(up: int, down: int) -> np.ndarray:
    half = _HALF_BLOCKS * down
    numtaps = 2 * half + 1
    # Cutoff at the smaller of the two Nyquist frequencies. Relative to the
    # high (upsampled) rate's Nyquist this is 1/max(up, down).
    cutoff = min(1.0 / up, 1.0 / down)
    h = _sig.firwin(numtaps, cutoff, window=("kaiser", _KAISER_BETA), fs=2.0)
    return h * up  # compensate upsampler gain


def resample(x, from_hz: int, to_hz: int) -> np.ndarray:
    """Resample a 1-D signal from `from_hz` to `to_hz` (rational ratio)."""
    if from_hz <= 0 or to_hz <= 0:
        raise InvalidArgumentError("sample rates must be positive")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgumentError("signal must be 1-D")
    if x.size == 0:
        return x.copy()
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise NonFiniteSignalError(int(bad[0]))
    g = gcd(from_hz, to_hz)
    up = to_hz // g
    down = from_hz // g
    if up == down:
        return x.copy()
    h = _antialias_fir(up, down)
    y_full = _sig.upfirdn(h, x, up=up, down=down)
    skip = (_HALF_BLOCKS * down) // down  # group delay in output samples
    n_out = (x.size * up) // down
    return y_full[skip : skip + n_out]


def output_length(n: int, from_hz: int, to_hz: int) -> int:
    """The documented exact output-length rule: floor(n * up / down)."""
    g = gcd(from_hz, to_hz)
    return (n * (to_hz // g)) // (from_hz // g)
