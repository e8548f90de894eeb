import numpy as np
import pytest

from ecg_har.errors import InvalidArgumentError
from ecg_har.labels import ActivityLabel
from ecg_har.synth import (
    DEFAULT_DYNAMICS,
    ActivityDynamics,
    SubjectProfile,
    draw_profile,
    generate_cohort,
    generate_recording,
)


def detect_r_peaks(lead, fs=512, min_separation_s=0.22):
    """QRS-energy peak counter (test oracle): 5-20 Hz bandpass isolates the
    QRS complex from wander and motion noise, then squared-energy peaks are
    picked with a refractory distance."""
    from scipy.signal import butter, filtfilt, find_peaks

    b, a = butter(2, [5.0, 20.0], btype="bandpass", fs=fs)
    energy = filtfilt(b, a, lead) ** 2
    kernel = np.ones(int(0.05 * fs)) / int(0.05 * fs)
    energy = np.convolve(energy, kernel, mode="same")
    peaks, _ = find_peaks(
        energy, height=0.25 * np.max(energy), distance=int(min_separation_s * fs)
    )
    return peaks


def fixed_profile(hr=60.0, jitter=0.0):
    return SubjectProfile(
        subject_id="sX",
        resting_hr_bpm=hr,
        hr_variability=jitter,
        r_amplitude_mv=(1.0, 0.6),
        noise_floor_mv=0.01,
    )


def no_jitter_dynamics(mult):
    return ActivityDynamics(mult, 0.0, 0.02, (0.5, 1.0))


def test_peak_count_matches_heart_rate():
    dyn = {a: no_jitter_dynamics(1.0) for a in ActivityLabel}
    rec = generate_recording(fixed_profile(60.0), ActivityLabel.SITTING, 60.0, seed=1, dynamics=dyn)
    peaks = detect_r_peaks(rec.lead_ll_la)
    assert abs(peaks.size - 60) <= 1


def test_running_multiplier_shortens_rr():
    dyn = {a: no_jitter_dynamics(1.9) for a in ActivityLabel}
    rec = generate_recording(fixed_profile(60.0), ActivityLabel.RUNNING, 60.0, seed=1, dynamics=dyn)
    peaks = detect_r_peaks(rec.lead_ll_la)
    mean_rr = np.mean(np.diff(peaks)) / 512.0
    assert mean_rr == pytest.approx(60.0 / (60.0 * 1.9), rel=0.05)


def test_determinism():
    p = fixed_profile(65.0, 0.01)
    a = generate_recording(p, ActivityLabel.WALKING, 30.0, seed=42)
    b = generate_recording(p, ActivityLabel.WALKING, 30.0, seed=42)
    assert np.array_equal(a.lead_ll_la, b.lead_ll_la)
    assert np.array_equal(a.lead_ll_ra, b.lead_ll_ra)
    c = generate_recording(p, ActivityLabel.WALKING, 30.0, seed=43)
    assert not np.array_equal(a.lead_ll_la, c.lead_ll_la)


def test_signals_finite_and_bounded():
    _, recs = generate_cohort(3, duration_s=15.0, seed=0)
    for rec in recs:
        for lead in (rec.lead_ll_la, rec.lead_ll_ra):
            assert np.all(np.isfinite(lead))
            assert np.max(np.abs(lead)) <= 20.0


def test_cohort_shape_and_distinct_profiles():
    profiles, recs = generate_cohort(12, duration_s=15.0, seed=7)
    assert len(recs) == 72
    hrs = {p.resting_hr_bpm for p in profiles}
    assert len(hrs) == 12


def test_mean_hr_follows_multiplier_ordering():
    profile = fixed_profile(60.0)
    dyn = {a: ActivityDynamics(DEFAULT_DYNAMICS[a].hr_multiplier, 0.0, 0.02, (0.5, 1.0))
           for a in ActivityLabel}
    counts = {}
    for act in ActivityLabel:
        rec = generate_recording(profile, act, 60.0, seed=3, dynamics=dyn)
        counts[act] = detect_r_peaks(rec.lead_ll_la).size
    ordering = [
        ActivityLabel.SITTING,
        ActivityLabel.STANDING,
        ActivityLabel.WALKING,
        ActivityLabel.CLIMBING_STAIRS,
        ActivityLabel.SKIPPING,
        ActivityLabel.RUNNING,
    ]
    vals = [counts[a] for a in ordering]
    assert vals == sorted(vals)


def test_knn_on_mean_hr_separates_classes():
    # pipeline-sanity oracle: 1-feature kNN on held-out subjects >= 80%
    profiles, recs = generate_cohort(12, duration_s=30.0, seed=11)
    feats = {}
    for rec in recs:
        hr = detect_r_peaks(rec.lead_ll_la).size / 30.0 * 60.0
        feats.setdefault(rec.subject_id, []).append((hr, int(rec.activity)))
    subjects = sorted(feats)
    train = [x for s in subjects[:9] for x in feats[s]]
    test = [x for s in subjects[9:] for x in feats[s]]
    correct = 0
    for hr, label in test:
        nearest = sorted(train, key=lambda p: abs(p[0] - hr))[:3]
        votes = np.bincount([l for _, l in nearest], minlength=6)
        if votes.argmax() == label:
            correct += 1
    assert correct / len(test) >= 0.8


def test_validation():
    with pytest.raises(InvalidArgumentError):
        generate_recording(fixed_profile(), ActivityLabel.SITTING, 5.0, seed=0)
    with pytest.raises(InvalidArgumentError):
        generate_cohort(2, seed=0)
    with pytest.raises(InvalidArgumentError):
        SubjectProfile("s", 120.0, 0.01, (1.0, 0.6), 0.01)
