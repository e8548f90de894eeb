"""Parameter checkpoints: JSON metadata + little-endian float32 payload.

A checkpoint is a pair of files sharing a stem: `<stem>.json` holds names,
shapes, stage, and seed; `<stem>.bin` holds every parameter's values as
little-endian 32-bit floats concatenated in declaration order.
"""
import json
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError

FORMAT_VERSION = 1


def save_checkpoint(stem, module, stage: str = "", seed: int = 0) -> None:
    stem = Path(stem)
    params = module.parameters()
    buffers = module.named_buffers()
    meta = {
        "format_version": FORMAT_VERSION,
        "stage": stage,
        "seed": seed,
        "dtype": "<f4",
        "params": [{"name": p.name, "shape": list(p.shape)} for p in params],
        "buffers": [
            {"name": name, "shape": list(getattr(owner, attr).shape)}
            for name, owner, attr in buffers
        ],
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    with open(stem.with_suffix(".bin"), "wb") as fh:
        for p in params:
            fh.write(np.ascontiguousarray(p.value, dtype="<f4").tobytes())
        for _, owner, attr in buffers:
            fh.write(np.ascontiguousarray(getattr(owner, attr), dtype="<f4").tobytes())


def load_checkpoint(stem, module) -> dict:
    """Load values into `module` (shapes must match); returns the metadata."""
    stem = Path(stem)
    meta = json.loads(stem.with_suffix(".json").read_text())
    params = module.parameters()
    recorded = meta["params"]
    if len(recorded) != len(params):
        raise InvalidArgumentError(
            f"checkpoint has {len(recorded)} parameters, model has {len(params)}"
        )
    raw = stem.with_suffix(".bin").read_bytes()
    offset = 0
    for p, rec in zip(params, recorded):
        if list(p.shape) != rec["shape"]:
            raise InvalidArgumentError(
                f"shape mismatch for {p.name}: checkpoint {rec['shape']} vs model {list(p.shape)}"
            )
        n = int(np.prod(rec["shape"])) if rec["shape"] else 1
        vals = np.frombuffer(raw, dtype="<f4", count=n, offset=offset)
        offset += 4 * n
        p.value = vals.reshape(p.shape).astype(p.value.dtype)
        p.grad = np.zeros_like(p.value)
    buffers = module.named_buffers()
    recorded_buffers = meta.get("buffers", [])
    if len(recorded_buffers) != len(buffers):
        raise InvalidArgumentError(
            f"checkpoint has {len(recorded_buffers)} buffers, model has {len(buffers)}"
        )
    for (name, owner, attr), rec in zip(buffers, recorded_buffers):
        current = getattr(owner, attr)
        if list(current.shape) != rec["shape"]:
            raise InvalidArgumentError(
                f"shape mismatch for buffer {name}: checkpoint {rec['shape']} "
                f"vs model {list(current.shape)}"
            )
        n = int(np.prod(rec["shape"])) if rec["shape"] else 1
        vals = np.frombuffer(raw, dtype="<f4", count=n, offset=offset)
        offset += 4 * n
        setattr(owner, attr, vals.reshape(current.shape).astype(current.dtype))
    if offset != len(raw):
        raise InvalidArgumentError("checkpoint payload size does not match metadata")
    return meta
