"""File formats: dense binary tensors, CSV observations, fitted-model archives."""
from __future__ import annotations

import csv
import json
import struct
import sys
from pathlib import Path

import numpy as np

from .estimator import P_ESTIMATED, P_GIVEN, FlostModel, ObservationSet, RegularizationConfig
from .prox import SvdFactors

MAGIC = b"FLT3"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQ")
HEADER_SIZE = _HEADER.size  # 32 bytes
_MAX_ELEMENTS = sys.maxsize // 8


class TensorFileError(ValueError):
    pass


class BadMagic(TensorFileError):
    pass


class BadVersion(TensorFileError):
    pass


class TruncatedFile(TensorFileError):
    pass


class DimOverflow(TensorFileError):
    pass


class ObservationParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}, line {line}: {msg}")
        self.line = line


def write_tensor(path, x) -> None:
    """Header (magic, u32 version, u64 M, N, T; little-endian) then float64 LE values, t fastest."""
    x = np.ascontiguousarray(x, dtype="<f8")
    if x.ndim != 3:
        raise ValueError(f"expected a 3-way tensor, got shape {x.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, *x.shape))
        fh.write(x.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < HEADER_SIZE:
        if data[:4] != MAGIC[:len(data[:4])]:
            raise BadMagic(f"{path}: not a FLT3 tensor file")
        raise TruncatedFile(f"{path}: header needs {HEADER_SIZE} bytes, file has {len(data)}")
    magic, version, M, N, T = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise BadVersion(f"{path}: unsupported version {version}")
    if M == 0 or N == 0 or T == 0:
        raise DimOverflow(f"{path}: zero dimension in {(M, N, T)}")
    if M * N * T > _MAX_ELEMENTS:
        raise DimOverflow(f"{path}: dims {(M, N, T)} overflow")
    expected = HEADER_SIZE + 8 * M * N * T
    if len(data) != expected:
        raise TruncatedFile(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=HEADER_SIZE).reshape(M, N, T).astype(np.float64)


def write_observations(path, obs: ObservationSet) -> None:
    M, N, T = obs.dims
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# M={M}\n# N={N}\n# T={T}\n")
        if obs.p is not None:
            fh.write(f"# p={obs.p!r}\n")
        fh.write(f"# p_source={obs.p_source}\n")
        fh.write("i,j,t,value\n")
        w = csv.writer(fh, lineterminator="\n")
        for i, j, t, v in zip(obs.i.tolist(), obs.j.tolist(), obs.t.tolist(), obs.values.tolist()):
            w.writerow((i, j, t, repr(v)))


def _dims_from_meta(path, lineno, meta):
    try:
        return tuple(int(meta[k]) for k in ("M", "N", "T"))
    except KeyError as exc:
        raise ObservationParseError(path, lineno, f"missing metadata {exc.args[0]}") from None
    except ValueError as exc:
        raise ObservationParseError(path, lineno, f"bad dims: {exc}") from None


def read_observations(path, dims=None) -> ObservationSet:
    """Parse an observation CSV; ``# key=value`` lines before the header carry dims and p."""
    meta: dict[str, str] = {}
    rows = []
    seen: set[tuple[int, int, int]] = set()
    header_seen = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if header_seen:
                    raise ObservationParseError(path, lineno, "metadata after header")
                key, sep, value = line[1:].partition("=")
                if not sep:
                    raise ObservationParseError(path, lineno, f"bad metadata line {line!r}")
                meta[key.strip()] = value.strip()
                continue
            if not header_seen:
                if line.replace(" ", "") != "i,j,t,value":
                    raise ObservationParseError(path, lineno, f"expected header 'i,j,t,value', got {line!r}")
                header_seen = True
                if dims is None:
                    dims = _dims_from_meta(path, lineno, meta)
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ObservationParseError(path, lineno, f"expected 4 fields, got {len(parts)}")
            try:
                key = (int(parts[0]), int(parts[1]), int(parts[2]))
                value = float(parts[3])
            except ValueError as exc:
                raise ObservationParseError(path, lineno, str(exc)) from None
            if any(not 0 <= k < d for k, d in zip(key, dims)):
                raise ObservationParseError(path, lineno, f"index {key} out of range for dims {tuple(dims)}")
            if key in seen:
                raise ObservationParseError(path, lineno, f"duplicate index {key}")
            seen.add(key)
            rows.append((*key, value))
    if not header_seen:
        raise ObservationParseError(path, 0, "missing header line")
    p = float(meta["p"]) if "p" in meta else None
    p_source = meta.get("p_source", P_GIVEN if p is not None else P_ESTIMATED)
    idx = np.array([r[:3] for r in rows], dtype=np.int64).reshape(-1, 3)
    values = np.array([r[3] for r in rows], dtype=np.float64)
    return ObservationSet(dims, idx[:, 0], idx[:, 1], idx[:, 2], values, p, p_source)


def save_model(path, model: FlostModel) -> None:
    """Store a fitted model as an ``.npz`` archive (no pickled objects)."""
    arrays = {
        "dims": np.array(model.dims, dtype=np.int64),
        "tail_l": model.tail_l, "tail_i": model.tail_i, "tail_j": model.tail_j,
        "tail_values": model.tail_values,
        "config": np.array(json.dumps({
            "K": model.config.K, "lambda1": list(model.config.lambda1),
            "lambda2": model.config.lambda2, "C1": model.config.C1, "C2": model.config.C2,
            "sigma_gamma": model.config.sigma_gamma, "p": model.p,
            "fit_seconds": model.fit_seconds,
        })),
    }
    for l, f in enumerate(model.lowrank_slices, start=1):
        arrays[f"U{l}"], arrays[f"s{l}"], arrays[f"V{l}"] = f.U, f.sigma, f.V
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> FlostModel:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["config"]))
        K = int(meta["K"])
        cfg = RegularizationConfig(K, tuple(meta["lambda1"]), meta["lambda2"],
                                   meta["C1"], meta["C2"], meta["sigma_gamma"])
        slices = tuple(SvdFactors(z[f"U{l}"], z[f"s{l}"], z[f"V{l}"]) for l in range(1, K + 1))
        return FlostModel(tuple(int(d) for d in z["dims"]), K, slices, z["tail_l"], z["tail_i"],
                          z["tail_j"], z["tail_values"], cfg, meta["p"], meta.get("fit_seconds"))
