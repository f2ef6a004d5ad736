"""Versioned binary checkpoint: config block + named float64 tensors."""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from ..errors import ModelLoadError
from .config import PoseNetConfig
from .model import PoseModel

_MAGIC = b"SMPOSE1\n"


def save_checkpoint(model: PoseModel, path) -> None:
    header = {
        "config": asdict(model.config),
        "norm_mean": list(model.norm_mean),
        "norm_std": list(model.norm_std),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(model.params)))
        for name in sorted(model.params):
            arr = np.asarray(model.params[name], dtype="<f8")
            nb = name.encode("utf-8")
            f.write(struct.pack("<H", len(nb)))
            f.write(nb)
            f.write(struct.pack("<B", arr.ndim))
            f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            f.write(np.ascontiguousarray(arr).tobytes())


def load_checkpoint(path) -> PoseModel:
    try:
        with open(path, "rb") as f:
            if f.read(len(_MAGIC)) != _MAGIC:
                raise ModelLoadError(f"{path}: not a pose checkpoint")
            (hlen,) = struct.unpack("<I", f.read(4))
            header = json.loads(f.read(hlen).decode("utf-8"))
            config = PoseNetConfig(**header["config"])
            (count,) = struct.unpack("<I", f.read(4))
            params = {}
            for _ in range(count):
                (nlen,) = struct.unpack("<H", f.read(2))
                name = f.read(nlen).decode("utf-8")
                (ndim,) = struct.unpack("<B", f.read(1))
                shape = struct.unpack(f"<{ndim}I", f.read(4 * ndim))
                size = int(np.prod(shape)) if shape else 1
                data = np.frombuffer(f.read(8 * size), dtype="<f8").copy()
                params[name] = data.reshape(shape)
    except (OSError, struct.error, KeyError, json.JSONDecodeError, TypeError) as e:
        raise ModelLoadError(f"{path}: {e}") from e
    return PoseModel(
        config=config,
        params=params,
        norm_mean=np.array(header["norm_mean"]),
        norm_std=np.array(header["norm_std"]),
    )
