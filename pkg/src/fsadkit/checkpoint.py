"""Checkpoint archive: text manifest followed by raw float32 blobs.

Layout (all text lines utf-8, terminated by a lone ``end`` line)::

    fsadkit-checkpoint v1
    meta <key> <value>
    params <n>
    param <name> <d0>x<d1>[x...] <offset> <nbytes>
    ...
    blob_sha256 <hex>
    end
    <concatenated little-endian float32 blobs in manifest order>

Offsets are relative to the first byte after the manifest.  The hash
covers the entire blob section.
"""

import hashlib
import os

import numpy as np
import torch

from .errors import NotFoundError, SchemaViolationError

MAGIC = "fsadkit-checkpoint v1"


def _shape_str(shape):
    return "x".join(str(d) for d in shape) if shape else "scalar"


def _parse_shape(text):
    return () if text == "scalar" else tuple(int(d) for d in text.split("x"))


def save_checkpoint(model, path, meta=None):
    entries = []
    blobs = []
    offset = 0
    for name, tensor in model.state_dict().items():
        data = tensor.detach().cpu().to(torch.float32).numpy().astype("<f4")
        raw = data.tobytes()
        entries.append((name, tuple(tensor.shape), offset, len(raw)))
        blobs.append(raw)
        offset += len(raw)
    blob = b"".join(blobs)
    digest = hashlib.sha256(blob).hexdigest()
    lines = [MAGIC]
    for key, value in (meta or {}).items():
        lines.append(f"meta {key} {value}")
    lines.append(f"params {len(entries)}")
    for name, shape, off, size in entries:
        lines.append(f"param {name} {_shape_str(shape)} {off} {size}")
    lines.append(f"blob_sha256 {digest}")
    lines.append("end")
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        fh.write(blob)


def read_manifest(path):
    if not os.path.isfile(path):
        raise NotFoundError(f"checkpoint {path} not found")
    with open(path, "rb") as fh:
        header = b""
        while True:
            line = fh.readline()
            if not line:
                raise SchemaViolationError(f"{path}: truncated manifest")
            header += line
            if line.strip() == b"end":
                break
        blob = fh.read()
    lines = header.decode("utf-8").splitlines()
    if not lines or lines[0] != MAGIC:
        raise SchemaViolationError(f"{path}: bad magic line")
    meta, entries, digest = {}, [], None
    for line in lines[1:]:
        parts = line.split()
        if not parts or parts[0] == "end":
            continue
        if parts[0] == "meta":
            meta[parts[1]] = " ".join(parts[2:])
        elif parts[0] == "params":
            continue
        elif parts[0] == "param":
            name, shape, off, size = parts[1], _parse_shape(parts[2]), int(parts[3]), int(parts[4])
            entries.append((name, shape, off, size))
        elif parts[0] == "blob_sha256":
            digest = parts[1]
        else:
            raise SchemaViolationError(f"{path}: unknown manifest line {line!r}")
    if digest is None:
        raise SchemaViolationError(f"{path}: missing blob hash")
    if hashlib.sha256(blob).hexdigest() != digest:
        raise SchemaViolationError(f"{path}: blob hash mismatch")
    return meta, entries, blob


def load_checkpoint(model, path, strict=True):
    """Load archived parameters into ``model``; returns the meta mapping."""
    meta, entries, blob = read_manifest(path)
    state = {}
    for name, shape, off, size in entries:
        flat = np.frombuffer(blob[off : off + size], dtype="<f4")
        expected = int(np.prod(shape)) if shape else 1
        if flat.size != expected:
            raise SchemaViolationError(f"{path}: size mismatch for {name}")
        state[name] = torch.from_numpy(flat.reshape(shape).copy())
    model.load_state_dict(state, strict=strict)
    return meta
