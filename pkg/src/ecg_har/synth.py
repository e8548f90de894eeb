"""Deterministic synthetic two-lead ECG cohort generator.

Stands in for the private dataset: each recording is a Gaussian-bump PQRST
beat train whose heart rate, rate jitter, and band-limited motion noise
depend on the activity, so activity labels are learnable from the ECG alone.

Reproducibility: every recording uses its own Philox counter-based
substream whose key is derived by hashing (seed, subject_id, activity), so
generation order and parallelism cannot change the output.
"""
import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .labels import ActivityLabel
from .preprocess import RawEcgRecording

# (time offset s, width s, amplitude relative to the R peak) for P,Q,R,S,T
_BEAT_BUMPS = (
    (-0.20, 0.040, 0.15),
    (-0.05, 0.015, -0.15),
    (0.00, 0.020, 1.00),
    (0.05, 0.015, -0.25),
    (0.30, 0.070, 0.35),
)


@dataclass(frozen=True)
class SubjectProfile:
    subject_id: str
    resting_hr_bpm: float
    hr_variability: float  # fractional RR jitter scale
    r_amplitude_mv: tuple  # (lead LL-LA, lead LL-RA)
    noise_floor_mv: float

    def __post_init__(self):
        if not (45.0 <= self.resting_hr_bpm <= 100.0):
            raise InvalidArgumentError("resting_hr_bpm must be in [45, 100]")
        if min(self.r_amplitude_mv) <= 0:
            raise InvalidArgumentError("R amplitudes must be positive")


@dataclass(frozen=True)
class ActivityDynamics:
    hr_multiplier: float
    hr_jitter: float  # fractional RR jitter added on top of subject variability
    motion_noise_mv: float  # RMS of band-limited motion noise
    motion_band_hz: tuple  # (low, high)


# Invented, documented defaults: multipliers rise with exertion, motion-noise
# bands roughly track step cadence. All configurable per call.
DEFAULT_DYNAMICS = {
    ActivityLabel.SITTING: ActivityDynamics(1.00, 0.02, 0.02, (0.5, 1.0)),
    ActivityLabel.STANDING: ActivityDynamics(1.10, 0.02, 0.08, (0.5, 1.2)),
    ActivityLabel.WALKING: ActivityDynamics(1.30, 0.03, 0.15, (1.5, 2.5)),
    ActivityLabel.SKIPPING: ActivityDynamics(1.80, 0.04, 0.30, (2.0, 3.0)),
    ActivityLabel.RUNNING: ActivityDynamics(2.00, 0.04, 0.25, (2.5, 3.5)),
    ActivityLabel.CLIMBING_STAIRS: ActivityDynamics(1.60, 0.03, 0.20, (1.0, 2.0)),
}

_MAX_ABS_MV = 20.0


def _substream(seed: int, *parts: str) -> np.random.Generator:
    """Philox generator keyed by hashing the seed with string parts."""
    digest = hashlib.sha256(
        (str(int(seed)) + "\x1f" + "\x1f".join(parts)).encode()
    ).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def draw_profile(subject_id: str, seed: int) -> SubjectProfile:
    """Documented profile distributions, drawn from the subject's substream."""
    rng = _substream(seed, subject_id, "profile")
    hr = float(np.clip(rng.normal(62.0, 2.5), 50.0, 75.0))
    amp_ii = float(rng.uniform(0.8, 1.2))
    amp_i = amp_ii * float(rng.uniform(0.5, 0.7))
    return SubjectProfile(
        subject_id=subject_id,
        resting_hr_bpm=hr,
        hr_variability=float(rng.uniform(0.005, 0.02)),
        r_amplitude_mv=(amp_ii, amp_i),
        noise_floor_mv=float(rng.uniform(0.01, 0.03)),
    )


def _band_noise(rng, n, fs, band, rms):
    """Band-limited noise as a sum of 40 random-phase sinusoids in the band."""
    if rms <= 0:
        return np.zeros(n)
    t = np.arange(n) / fs
    freqs = rng.uniform(band[0], band[1], size=40)
    phases = rng.uniform(0, 2 * np.pi, size=40)
    x = np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None]).sum(axis=0)
    return x * (rms / np.sqrt(np.mean(x**2)))


def generate_recording(
    profile: SubjectProfile,
    activity: ActivityLabel,
    duration_s: float,
    fs_hz: int = 512,
    seed: int = 0,
    dynamics: dict | None = None,
) -> RawEcgRecording:
    """Synthesize one two-lead recording; deterministic in (profile, activity, seed)."""
    if duration_s < 10:
        raise InvalidArgumentError("duration_s must be >= 10")
    dyn = (dynamics or DEFAULT_DYNAMICS)[activity]
    rng = _substream(seed, profile.subject_id, activity.label_name)
    n = int(round(duration_s * fs_hz))
    t = np.arange(n) / fs_hz

    hr = profile.resting_hr_bpm * dyn.hr_multiplier
    mean_rr = 60.0 / hr
    jitter = profile.hr_variability + dyn.hr_jitter
    # beat train with jittered RR intervals covering the whole duration
    n_beats = int(np.ceil(duration_s / mean_rr)) + 4
    rr = mean_rr * (1.0 + jitter * rng.standard_normal(n_beats))
    rr = np.clip(rr, 0.4 * mean_rr, 1.6 * mean_rr)
    beat_times = np.concatenate([[0.4 * mean_rr], rr]).cumsum()
    beat_times = beat_times[beat_times < duration_s + 0.5]

    clean = np.zeros(n)
    for bt in beat_times:
        lo = max(0, int((bt - 0.45) * fs_hz))
        hi = min(n, int((bt + 0.55) * fs_hz))
        if lo >= hi:
            continue
        seg = t[lo:hi] - bt
        for off, width, rel in _BEAT_BUMPS:
            clean[lo:hi] += rel * np.exp(-0.5 * ((seg - off) / width) ** 2)

    leads = []
    for lead_idx in range(2):
        wander = sum(
            float(rng.uniform(0.05, 0.25))
            * np.sin(2 * np.pi * float(rng.uniform(0.05, 0.3)) * t + float(rng.uniform(0, 2 * np.pi)))
            for _ in range(3)
        )
        motion = _band_noise(rng, n, fs_hz, dyn.motion_band_hz, dyn.motion_noise_mv)
        white = profile.noise_floor_mv * rng.standard_normal(n)
        lead = profile.r_amplitude_mv[lead_idx] * clean + wander + motion + white
        leads.append(np.clip(lead, -_MAX_ABS_MV, _MAX_ABS_MV))

    return RawEcgRecording(
        subject_id=profile.subject_id,
        activity=activity,
        sample_rate_hz=fs_hz,
        lead_ll_la=leads[0],
        lead_ll_ra=leads[1],
    )


def generate_cohort(
    n_subjects: int,
    duration_s: float = 60.0,
    seed: int = 0,
    fs_hz: int = 512,
    dynamics: dict | None = None,
):
    """One recording per subject per activity; returns (profiles, recordings)."""
    if n_subjects < 3:
        raise InvalidArgumentError("n_subjects must be >= 3")
    profiles = [draw_profile(f"s{i:03d}", seed) for i in range(n_subjects)]
    recordings = [
        generate_recording(p, act, duration_s, fs_hz, seed, dynamics)
        for p in profiles
        for act in ActivityLabel
    ]
    return profiles, recordings
