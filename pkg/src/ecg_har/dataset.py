"""Artifact formats: per-recording CSV, cohort manifest, windowed dataset.

The windowed dataset file is a compact JSON header (schema version, channel
layout, window/step, label map, per-window subject/activity records), a
single newline, then a flat little-endian float32 payload in row-major
(window, channel, time) order.
"""
import csv
import io
import json
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .labels import LABEL_NAMES, ActivityLabel
from .preprocess import (
    CHANNEL_LAYOUT,
    WINDOW_LENGTH,
    WINDOW_STEP,
    RawEcgRecording,
    WindowSample,
)

SCHEMA_VERSION = 1
CSV_FIELDS = ("t_s", "ll_la_mv", "ll_ra_mv")
MANIFEST_NAME = "cohort.json"


# --------------------------------------------------------------- recordings

def write_recording_csv(path, recording: RawEcgRecording) -> None:
    path = Path(path)
    t = np.arange(len(recording.lead_ll_la)) / recording.sample_rate_hz
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for ti, a, b in zip(t, recording.lead_ll_la, recording.lead_ll_ra):
        writer.writerow([f"{ti:.9f}", f"{a:.9f}", f"{b:.9f}"])
    path.write_text(buf.getvalue())


def read_recording_csv(path, subject_id: str, activity: ActivityLabel) -> RawEcgRecording:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(CSV_FIELDS):
            raise InvalidArgumentError(f"{path}: expected header {','.join(CSV_FIELDS)}")
        rows = np.array([[float(v) for v in row] for row in reader])
    if rows.ndim != 2 or rows.shape[0] < 2 or rows.shape[1] != 3:
        raise InvalidArgumentError(f"{path}: expected >= 2 data rows of 3 columns")
    dt = np.diff(rows[:, 0])
    if not np.allclose(dt, dt[0], rtol=1e-6, atol=1e-9) or dt[0] <= 0:
        raise InvalidArgumentError(f"{path}: time column must increase uniformly")
    fs = int(round(1.0 / dt[0]))
    return RawEcgRecording(
        subject_id=subject_id,
        activity=activity,
        sample_rate_hz=fs,
        lead_ll_la=rows[:, 1],
        lead_ll_ra=rows[:, 2],
    )


def write_cohort_dir(out_dir, recordings, seed: int) -> Path:
    """Write one CSV per recording plus the manifest mapping file -> labels."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = {}
    for rec in recordings:
        fname = f"{rec.subject_id}_{rec.activity.label_name}.csv"
        write_recording_csv(out / fname, rec)
        entries[fname] = {"subject_id": rec.subject_id,
                          "activity": rec.activity.label_name}
    manifest = {"schema_version": SCHEMA_VERSION, "seed": seed, "recordings": entries}
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def read_cohort_dir(in_dir) -> list:
    """Load every recording named by the directory's manifest."""
    in_dir = Path(in_dir)
    manifest = json.loads((in_dir / MANIFEST_NAME).read_text())
    recordings = []
    for fname in sorted(manifest["recordings"]):
        entry = manifest["recordings"][fname]
        recordings.append(read_recording_csv(
            in_dir / fname,
            subject_id=entry["subject_id"],
            activity=ActivityLabel.from_name(entry["activity"]),
        ))
    return recordings


# --------------------------------------------------------------- windowed dataset

def save_windows(path, windows) -> None:
    windows = list(windows)
    if not windows:
        raise InvalidArgumentError("no windows to save")
    header = {
        "schema_version": SCHEMA_VERSION,
        "channel_layout": list(CHANNEL_LAYOUT),
        "window": WINDOW_LENGTH,
        "step": WINDOW_STEP,
        "label_map": {name: i for i, name in enumerate(LABEL_NAMES)},
        "windows": [
            {"subject_id": w.subject_id, "activity": w.activity.label_name,
             "offset": w.offset}
            for w in windows
        ],
    }
    payload = np.stack([w.data for w in windows]).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode())
        fh.write(b"\n")
        fh.write(payload.tobytes())


def load_windows(path) -> list:
    raw = Path(path).read_bytes()
    split = raw.index(b"\n")
    header = json.loads(raw[:split])
    if header.get("schema_version") != SCHEMA_VERSION:
        raise InvalidArgumentError(f"unsupported schema version {header.get('schema_version')}")
    records = header["windows"]
    n, c, t = len(records), len(header["channel_layout"]), header["window"]
    data = np.frombuffer(raw[split + 1:], dtype="<f4")
    if data.size != n * c * t:
        raise InvalidArgumentError(
            f"payload holds {data.size} floats, header implies {n * c * t}"
        )
    data = data.reshape(n, c, t)
    return [
        WindowSample(
            data=np.array(data[i]),
            activity=ActivityLabel.from_name(rec["activity"]),
            subject_id=rec["subject_id"],
            offset=int(rec["offset"]),
        )
        for i, rec in enumerate(records)
    ]


# --------------------------------------------------------------- array views

def cohort_arrays(cohort, subjects=None, indices=None):
    """Stack a cohort (or a subject/index selection) into (x, y) arrays."""
    if indices is None:
        if subjects is None:
            indices = range(len(cohort.windows))
        else:
            indices = cohort.windows_for_subjects(subjects)
    windows = [cohort.windows[i] for i in indices]
    if not windows:
        raise InvalidArgumentError("selection contains no windows")
    x = np.stack([w.data for w in windows]).astype(np.float32)
    y = np.array([int(w.activity) for w in windows], dtype=np.int64)
    return x, y
