"""End-to-end preprocessing: two-lead ECG -> fixed 18-channel windows.

Per lead: high-pass filter (0.5 Hz, order 5) -> resample 512 Hz -> 50 Hz ->
per-recording z-score -> EMD into 8 IMFs. The 18 channels are stacked in the
fixed order

    [lead LL-LA, lead LL-RA, LL-LA IMF1..8, LL-RA IMF1..8]

and cut into 256-sample windows with a 64-sample sliding step.
"""
from dataclasses import dataclass, field

import numpy as np

from . import emd as _emd
from . import filters as _filters
from . import resampling as _resampling
from .errors import (
    ConstantSignalError,
    InvalidArgumentError,
    NonFiniteSignalError,
    PipelineStageError,
    TooShortError,
)
from .labels import ActivityLabel

SOURCE_RATE_HZ = 512
TARGET_RATE_HZ = 50
NUM_IMFS = 8
WINDOW_LENGTH = 256
WINDOW_STEP = 64
NUM_CHANNELS = 2 + 2 * NUM_IMFS

CHANNEL_LAYOUT = (
    ["lead_ll_la", "lead_ll_ra"]
    + [f"ll_la_imf{i + 1}" for i in range(NUM_IMFS)]
    + [f"ll_ra_imf{i + 1}" for i in range(NUM_IMFS)]
)


@dataclass(frozen=True)
class RawEcgRecording:
    """One subject x activity two-lead trace at the source rate (mV)."""

    subject_id: str
    activity: ActivityLabel
    sample_rate_hz: int
    lead_ll_la: np.ndarray
    lead_ll_ra: np.ndarray

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise InvalidArgumentError("sample_rate_hz must be positive")
        a = np.asarray(self.lead_ll_la, dtype=np.float64)
        b = np.asarray(self.lead_ll_ra, dtype=np.float64)
        if a.size < 1 or a.shape != b.shape or a.ndim != 1:
            raise InvalidArgumentError("leads must be equal-length 1-D sequences of length >= 1")
        for lead in (a, b):
            bad = np.flatnonzero(~np.isfinite(lead))
            if bad.size:
                raise NonFiniteSignalError(int(bad[0]))
        object.__setattr__(self, "lead_ll_la", a)
        object.__setattr__(self, "lead_ll_ra", b)

    @property
    def num_samples(self) -> int:
        return self.lead_ll_la.size


@dataclass(frozen=True)
class PreprocessedRecording:
    subject_id: str
    activity: ActivityLabel
    sample_rate_hz: int
    leads: np.ndarray  # (2, n), drift-removed, resampled, z-normalized


@dataclass(frozen=True)
class ImfStack:
    """Per-lead IMFs and residuals; imfs shape (2, NUM_IMFS, n)."""

    imfs: np.ndarray
    residuals: np.ndarray  # (2, n)
    num_genuine: tuple  # per lead

    @property
    def padded(self) -> bool:
        return any(g < self.imfs.shape[1] for g in self.num_genuine)


@dataclass(frozen=True)
class WindowSample:
    data: np.ndarray  # (NUM_CHANNELS, WINDOW_LENGTH)
    activity: ActivityLabel
    subject_id: str
    offset: int = 0


def normalize(signal) -> np.ndarray:
    """Z-score over the whole sequence; rejects (near-)constant input."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size < 2:
        raise InvalidArgumentError("need at least 2 samples to normalize")
    std = float(x.std())
    if std < 1e-12:
        raise ConstantSignalError(f"signal standard deviation {std} is below 1e-12")
    return (x - x.mean()) / std


def segment_windows(
    channels: np.ndarray,
    activity: ActivityLabel,
    subject_id: str,
    window: int = WINDOW_LENGTH,
    step: int = WINDOW_STEP,
) -> list[WindowSample]:
    """Slide a fixed window over (C, L) channels; trailing partials dropped."""
    channels = np.asarray(channels)
    c, n = channels.shape
    if n < window:
        raise TooShortError(n, window)
    count = (n - window) // step + 1
    return [
        WindowSample(
            data=channels[:, i * step : i * step + window].copy(),
            activity=activity,
            subject_id=subject_id,
            offset=i * step,
        )
        for i in range(count)
    ]


def window_count(n: int, window: int = WINDOW_LENGTH, step: int = WINDOW_STEP) -> int:
    return (n - window) // step + 1 if n >= window else 0


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # noqa: BLE001 - re-raised with stage context
        raise PipelineStageError(name, exc) from exc


def preprocess_leads(raw: RawEcgRecording, emd_config=None):
    """Filter, resample, and normalize both leads, then decompose into IMFs.

    Returns (PreprocessedRecording, ImfStack).
    """
    spec = _stage(
        "filter-design", _filters.design_highpass, 0.5, 5, float(raw.sample_rate_hz)
    )
    leads = []
    decomps = []
    for name, lead in (("ll_la", raw.lead_ll_la), ("ll_ra", raw.lead_ll_ra)):
        filtered = _stage(f"filter[{name}]", _filters.apply_filter, spec, lead)
        low = _stage(
            f"resample[{name}]", _resampling.resample, filtered, raw.sample_rate_hz, TARGET_RATE_HZ
        )
        norm = _stage(f"normalize[{name}]", normalize, low)
        leads.append(norm)
        decomps.append(_stage(f"emd[{name}]", _emd.emd, norm, NUM_IMFS, emd_config))
    pre = PreprocessedRecording(
        subject_id=raw.subject_id,
        activity=raw.activity,
        sample_rate_hz=TARGET_RATE_HZ,
        leads=np.stack(leads),
    )
    stack = ImfStack(
        imfs=np.stack([d.imfs for d in decomps]),
        residuals=np.stack([d.residual for d in decomps]),
        num_genuine=tuple(d.num_genuine for d in decomps),
    )
    return pre, stack


def assemble_channels(pre: PreprocessedRecording, stack: ImfStack) -> np.ndarray:
    """Stack the documented 18-channel layout as (18, n)."""
    return np.concatenate(
        [pre.leads, stack.imfs[0], stack.imfs[1]], axis=0
    )


def preprocess_recording(raw: RawEcgRecording, emd_config=None) -> list[WindowSample]:
    """Full pipeline for one recording: returns its WindowSamples."""
    pre, stack = preprocess_leads(raw, emd_config)
    channels = assemble_channels(pre, stack)
    return _stage(
        "segment", segment_windows, channels, raw.activity, raw.subject_id
    )
