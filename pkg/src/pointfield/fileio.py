"""Plain-text outputs: CSV with full-precision reals, JSON summaries, LF line endings."""
from __future__ import annotations

import hashlib
import json
import math
import os
from typing import Iterable, Sequence

import numpy as np

FLOAT_FMT = ".16e"


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), FLOAT_FMT) if math.isfinite(v) else str(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    write_text(path, csv_text(header, rows))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return [_jsonable(x) for x in o.tolist()]
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(x) for x in o]
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return o


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: str, obj) -> None:
    write_text(path, json_text(obj))


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def samples_text(meta: dict, forces: np.ndarray, energies: np.ndarray) -> str:
    """'#'-prefixed ``key = value`` header lines, a column line, then one row per trial."""
    d = forces.shape[1]
    head = [f"# {k} = {fmt(v) if not isinstance(v, (list, tuple)) else ';'.join(fmt(x) for x in v)}"
            for k, v in meta.items()]
    cols = ["trial"] + [f"f_{j + 1}" for j in range(d)] + ["energy"]
    body = [",".join([str(t)] + [format(x, FLOAT_FMT) for x in forces[t]] + [format(energies[t], FLOAT_FMT)])
            for t in range(len(energies))]
    return "\n".join(head + [",".join(cols)] + body) + "\n"


def read_samples(path: str) -> tuple[dict, np.ndarray, np.ndarray]:
    """Inverse of samples_text: (metadata strings, forces, energies)."""
    meta = {}
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        key, _, val = lines[i][1:].partition("=")
        meta[key.strip()] = val.strip()
        i += 1
    cols = lines[i].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[i + 1:] if ln], dtype=float)
    data = data.reshape(-1, len(cols))
    return meta, data[:, 1:-1], data[:, -1]
