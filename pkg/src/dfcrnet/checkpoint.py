"""Self-describing checkpoint container.

File layout:

    bytes 0..4    magic "DFCR1"
    bytes 5..8    header length, u32 little-endian
    ...           header, UTF-8 JSON
    ...           tensor payload, raw little-endian bytes

The header carries the config snapshot, seed, step/epoch counters, arbitrary
extra metadata (e.g. normalization statistics), and a tensor index of
(name, dtype, shape, offset, nbytes) entries pointing into the payload.
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

MAGIC = b"DFCR1"
FORMAT_VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64, "int64": np.int64}


@dataclass
class Checkpoint:
    config: dict
    seed: int
    step: int
    epoch: int
    extra: dict
    state_dict: dict


def save_checkpoint(
    path: str | Path,
    state_dict: dict,
    config: dict,
    seed: int,
    step: int,
    epoch: int = 0,
    extra: dict | None = None,
) -> None:
    index = []
    chunks = []
    offset = 0
    for name, tensor in state_dict.items():
        array = tensor.detach().cpu().numpy()
        dtype = str(array.dtype)
        if dtype not in _DTYPES:
            raise ValueError(f"unsupported tensor dtype {dtype} for {name!r}")
        blob = np.ascontiguousarray(array).astype(array.dtype.newbyteorder("<")).tobytes()
        index.append(
            {
                "name": name,
                "dtype": dtype,
                "shape": list(array.shape),
                "offset": offset,
                "nbytes": len(blob),
            }
        )
        chunks.append(blob)
        offset += len(blob)
    header = {
        "format_version": FORMAT_VERSION,
        "config": config,
        "seed": seed,
        "step": step,
        "epoch": epoch,
        "extra": extra or {},
        "tensors": index,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for blob in chunks:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> Checkpoint:
    blob = Path(path).read_bytes()
    if blob[:5] != MAGIC:
        raise ValueError(f"bad checkpoint magic {blob[:5]!r}, expected {MAGIC!r}")
    (header_len,) = struct.unpack_from("<I", blob, 5)
    header = json.loads(blob[9 : 9 + header_len].decode())
    if header["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {header['format_version']}")
    payload = blob[9 + header_len :]
    state = {}
    for entry in header["tensors"]:
        start, n = entry["offset"], entry["nbytes"]
        array = np.frombuffer(payload[start : start + n], dtype=_DTYPES[entry["dtype"]])
        state[entry["name"]] = torch.from_numpy(
            array.reshape(entry["shape"]).copy()
        )
    return Checkpoint(
        config=header["config"],
        seed=header["seed"],
        step=header["step"],
        epoch=header["epoch"],
        extra=header["extra"],
        state_dict=state,
    )
