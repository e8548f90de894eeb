"""High-pass Butterworth drift-removal filter: design and application.

The filter is designed from the analog Butterworth prototype via the bilinear
transform with frequency prewarping and stored as cascaded second-order
sections for numerical stability at low cutoff / high sample-rate ratios.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as _sig

from .errors import InvalidArgumentError, NonFiniteSignalError


@dataclass(frozen=True)
class SosSection:
    """One biquad: y[n] = b0 x[n] + b1 x[n-1] + b2 x[n-2] - a1 y[n-1] - a2 y[n-2]."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def poles(self) -> np.ndarray:
        return np.roots([1.0, self.a1, self.a2])


@dataclass(frozen=True)
class FilterSpec:
    """A designed high-pass filter as second-order sections."""

    kind: str
    cutoff_hz: float
    order: int
    fs_hz: float
    sections: tuple = field(default_factory=tuple)

    def sos_array(self) -> np.ndarray:
        """Sections in scipy layout (b0, b1, b2, 1, a1, a2), shape (n, 6)."""
        return np.array(
            [[s.b0, s.b1, s.b2, 1.0, s.a1, s.a2] for s in self.sections], dtype=np.float64
        )


def design_highpass(cutoff_hz: float, order: int, fs_hz: float) -> FilterSpec:
    """Design a digital high-pass Butterworth filter.

    Raises InvalidArgumentError if the cutoff is outside (0, Nyquist) or the
    order is below 1.
    """
    if not (0.0 < cutoff_hz < fs_hz / 2.0):
        raise InvalidArgumentError(
            f"cutoff {cutoff_hz} Hz must lie in (0, {fs_hz / 2.0}) for fs={fs_hz} Hz"
        )
    if order < 1:
        raise InvalidArgumentError(f"order must be >= 1, got {order}")
    sos = _sig.butter(order, cutoff_hz, btype="highpass", fs=fs_hz, output="sos")
    sections = tuple(SosSection(b0=r[0], b1=r[1], b2=r[2], a1=r[4], a2=r[5]) for r in sos)
    return FilterSpec(
        kind="butterworth_highpass",
        cutoff_hz=cutoff_hz,
        order=order,
        fs_hz=fs_hz,
        sections=sections,
    )


def frequency_response(spec: FilterSpec, freqs_hz) -> np.ndarray:
    """Complex response of the section cascade at the given frequencies."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / spec.fs_hz
    z = np.exp(1j * w)
    h = np.ones_like(z)
    for s in spec.sections:
        num = s.b0 + s.b1 / z + s.b2 / z**2
        den = 1.0 + s.a1 / z + s.a2 / z**2
        h = h * num / den
    return h


def apply_filter(spec: FilterSpec, x, zero_phase: bool = False) -> np.ndarray:
    """Run the section cascade causally over a signal.

    Initial conditions are the step steady state scaled by x[0], which
    suppresses the multi-second start-up transient the 0.5 Hz cutoff would
    otherwise produce; scaling by x[0] keeps the operation linear.
    zero_phase=True additionally runs the cascade backward (squared magnitude
    response, no phase distortion).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise InvalidArgumentError("signal must be a non-empty 1-D sequence")
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise NonFiniteSignalError(int(bad[0]))
    sos = spec.sos_array()
    zi = _sig.sosfilt_zi(sos)
    y, _ = _sig.sosfilt(sos, x, zi=zi * x[0])
    if zero_phase:
        y, _ = _sig.sosfilt(sos, y[::-1], zi=zi * y[-1])
        y = y[::-1]
    return y
