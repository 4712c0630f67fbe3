"""Self-describing checkpoint container.

Layout: magic, little-endian uint64 manifest length, UTF-8 JSON manifest,
then the concatenated raw little-endian float32 tensor payloads. The
manifest records (name, shape, offset) per tensor plus a free-form metadata
mapping. Round trips are bit-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"FTQCKPT1"


def save(path, tensors: dict, metadata: dict | None = None) -> None:
    """Write named float32 tensors (values are cast) plus metadata."""
    entries = []
    offset = 0
    blobs = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blob = arr.tobytes()
        blobs.append(blob)
        offset += len(blob)
    manifest = json.dumps(
        {"tensors": entries, "metadata": metadata or {}}
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(manifest)))
        f.write(manifest)
        for blob in blobs:
            f.write(blob)


def load(path) -> tuple[dict, dict]:
    """Read a container; returns (tensors by name, metadata)."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a checkpoint container")
        (mlen,) = struct.unpack("<Q", f.read(8))
        manifest = json.loads(f.read(mlen).decode("utf-8"))
        payload = f.read()
    tensors = {}
    for e in manifest["tensors"]:
        shape = tuple(e["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = e["offset"]
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
        tensors[e["name"]] = arr.reshape(shape).copy()
    return tensors, manifest["metadata"]


def pack_mlp(prefix: str, mlp) -> dict:
    out = {}
    for i, (w, b) in enumerate(zip(mlp.weights, mlp.biases)):
        out[f"{prefix}/w{i}"] = w
        out[f"{prefix}/b{i}"] = b
    return out


def unpack_mlp(prefix: str, tensors: dict, mlp) -> None:
    params = []
    for i in range(len(mlp.weights)):
        for kind in ("w", "b"):
            key = f"{prefix}/{kind}{i}"
            if key not in tensors:
                raise KeyError(f"checkpoint missing tensor {key}")
            params.append(tensors[key])
    mlp.set_parameters(params)
