"""Dataset and model persistence.

Datasets are a UTF-8 JSON manifest next to a raw little-endian float32 tensor
indexed ``[block][target][channel][sample]``. Missing (block, target) cells are
listed in the manifest and stored as NaN.

Models use a small binary container::

    b"SSVF" | version (u8) | header length (u32 LE) | JSON header | float64 LE payload

The header names the method, carries the configuration snapshot and lists
each array's name, shape and byte offset into the payload.
"""
from __future__ import annotations

import csv
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .adtrca import AdTrcaModel
from .core import Dataset, Trial
from .errors import CorruptFileError, InvalidDatasetError, InvalidInputError, VersionError
from .trca import TrcaModel

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
TENSOR_NAME = "tensor.f32"

MODEL_MAGIC = b"SSVF"
MODEL_VERSION = 1
_MODEL_ARRAYS = {
    "trca": ("filters", "templates"),
    "adtrca": ("temporal_filters", "filters", "templates"),
}


def atomic_write(path, data: bytes | str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_manifest(dataset: Dataset, tensor_file: str = TENSOR_NAME) -> dict:
    missing = [
        [b, s] for b in range(dataset.n_blocks) for s in range(dataset.n_stimuli)
        if dataset.trial(b, s) is None
    ]
    return {
        "format_version": FORMAT_VERSION,
        "sampling_rate_hz": dataset.sampling_rate_hz,
        "stimulus_frequencies_hz": list(dataset.stimulus_frequencies_hz),
        "channel_names": list(dataset.channel_names),
        "n_blocks": dataset.n_blocks,
        "n_targets": dataset.n_stimuli,
        "n_samples": dataset.n_samples,
        "latency_s": dataset.latency_s,
        "tensor_file": tensor_file,
        "byte_order": "little",
        "sample_type": "float32",
        "missing_cells": missing,
    }


def save_dataset(dataset: Dataset, path) -> Path:
    """Write ``manifest.json`` and the tensor into directory ``path``; returns the manifest path.

    Samples are stored as float32, so the round trip is exact for data that
    is float32-representable (generated datasets are).
    """
    path = Path(path)
    bad = [t.block_index for t in dataset.trials if not 0 <= t.block_index < dataset.n_blocks]
    if bad:
        raise InvalidDatasetError(f"block indices {sorted(set(bad))} outside [0, {dataset.n_blocks})")
    shape = (dataset.n_blocks, dataset.n_stimuli, dataset.n_channels, dataset.n_samples)
    tensor = np.full(shape, np.nan, dtype="<f4")
    for t in dataset.trials:
        tensor[t.block_index, t.stimulus_index] = t.samples
    manifest = dataset_manifest(dataset)
    atomic_write(path / TENSOR_NAME, tensor.tobytes(order="C"))
    atomic_write(path / MANIFEST_NAME, json.dumps(manifest, indent=2) + "\n")
    return path / MANIFEST_NAME


def _read_manifest(path: Path) -> tuple[dict, Path]:
    mpath = path / MANIFEST_NAME if path.is_dir() else path
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptFileError(f"{mpath}: manifest is not valid JSON ({exc})") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"{mpath}: unsupported format_version {manifest.get('format_version')!r}")
    return manifest, mpath


def load_dataset(path) -> Dataset:
    """Load from a dataset directory or its manifest file."""
    manifest, mpath = _read_manifest(Path(path))
    try:
        if manifest["byte_order"] != "little" or manifest["sample_type"] != "float32":
            raise VersionError(f"{mpath}: unsupported storage {manifest['byte_order']}/{manifest['sample_type']}")
        shape = (int(manifest["n_blocks"]), int(manifest["n_targets"]),
                 len(manifest["channel_names"]), int(manifest["n_samples"]))
        tpath = mpath.parent / manifest["tensor_file"]
        freqs = manifest["stimulus_frequencies_hz"]
    except KeyError as exc:
        raise CorruptFileError(f"{mpath}: manifest lacks field {exc}") from exc
    if len(freqs) != shape[1]:
        raise CorruptFileError(f"{mpath}: {len(freqs)} frequencies for {shape[1]} targets")
    raw = tpath.read_bytes()
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise CorruptFileError(f"{tpath}: {len(raw)} bytes, manifest declares {expected}")
    tensor = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
    missing = {tuple(c) for c in manifest.get("missing_cells", [])}
    trials = [
        Trial(tensor[b, s], s, b)
        for b in range(shape[0]) for s in range(shape[1]) if (b, s) not in missing
    ]
    return Dataset(trials, manifest["sampling_rate_hz"], freqs, shape[0],
                   manifest["channel_names"], manifest.get("latency_s", 0.0))


def _read_trial_csv(path: Path, n_channels: int) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header line
                raise CorruptFileError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if len(values) != n_channels:
                raise CorruptFileError(
                    f"{path}:{lineno}: expected {n_channels} columns, found {len(values)}"
                )
            rows.append(values)
    if not rows:
        raise CorruptFileError(f"{path}: no samples")
    return np.asarray(rows, dtype=np.float64).T


def import_csv(directory, manifest) -> Dataset:
    """Assemble a dataset from ``block{b}_target{t}.csv`` files (0-based indices).

    Each file has one row per sample and one column per channel, with an
    optional header line. ``manifest`` is a dict (or JSON file) giving
    ``sampling_rate_hz``, ``stimulus_frequencies_hz``, ``channel_names``,
    ``n_blocks`` and optionally ``n_targets`` and ``latency_s``.
    """
    directory = Path(directory)
    if not isinstance(manifest, dict):
        manifest = json.loads(Path(manifest).read_text(encoding="utf-8"))
    try:
        freqs = manifest["stimulus_frequencies_hz"]
        names = manifest["channel_names"]
        n_blocks = int(manifest["n_blocks"])
        fs = manifest["sampling_rate_hz"]
    except KeyError as exc:
        raise InvalidInputError(f"import manifest lacks field {exc}") from exc
    n_targets = int(manifest.get("n_targets", len(freqs)))
    if n_targets != len(freqs):
        raise InvalidInputError(f"{len(freqs)} frequencies for {n_targets} targets")
    trials = []
    for b in range(n_blocks):
        for s in range(n_targets):
            p = directory / f"block{b}_target{s}.csv"
            if not p.exists():
                raise InvalidDatasetError(f"missing trial file for block {b}, target {s}: {p}")
            trials.append(Trial(_read_trial_csv(p, len(names)), s, b))
    lengths = {t.n_samples for t in trials}
    if len(lengths) != 1:
        raise CorruptFileError(f"trial files have differing sample counts {sorted(lengths)}")
    if "n_samples" in manifest and int(manifest["n_samples"]) not in lengths:
        raise CorruptFileError(f"trial files have {lengths.pop()} samples, manifest says {manifest['n_samples']}")
    return Dataset(trials, fs, freqs, n_blocks, names, manifest.get("latency_s", 0.0))


def _model_parts(model) -> tuple[str, dict, dict]:
    if isinstance(model, AdTrcaModel):
        method = "adtrca"
    elif isinstance(model, TrcaModel):
        method = "trca"
    else:
        raise InvalidInputError(f"cannot serialize {type(model).__name__}")
    arrays = {name: np.ascontiguousarray(getattr(model, name), dtype="<f8") for name in _MODEL_ARRAYS[method]}
    return method, arrays, model.meta


def model_bytes(model) -> bytes:
    method, arrays, meta = _model_parts(model)
    entries, offset = [], 0
    for name, arr in arrays.items():
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes
    header = json.dumps({"method": method, "meta": meta, "arrays": entries}, sort_keys=True).encode("utf-8")
    payload = b"".join(arr.tobytes(order="C") for arr in arrays.values())
    return MODEL_MAGIC + struct.pack("<BI", MODEL_VERSION, len(header)) + header + payload


def save_model(model, path) -> None:
    atomic_write(path, model_bytes(model))


def model_from_bytes(raw: bytes, expected_method: str | None = None):
    if len(raw) < 9 or raw[:4] != MODEL_MAGIC:
        raise VersionError("not a model file (bad magic)")
    version, hlen = struct.unpack("<BI", raw[4:9])
    if version != MODEL_VERSION:
        raise VersionError(f"unsupported model version {version}")
    if 9 + hlen > len(raw):
        raise CorruptFileError("model header extends past end of file")
    try:
        header = json.loads(raw[9:9 + hlen].decode("utf-8"))
        method = header["method"]
        entries = header["arrays"]
        meta = header["meta"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise VersionError(f"unreadable model header: {exc}") from exc
    if method not in _MODEL_ARRAYS:
        raise VersionError(f"unknown method tag {method!r}")
    if expected_method is not None and method != expected_method:
        raise VersionError(f"model holds method {method!r}, expected {expected_method!r}")
    payload = raw[9 + hlen:]
    arrays = {}
    for e in entries:
        n = int(np.prod(e["shape"])) * 8
        chunk = payload[e["offset"]:e["offset"] + n]
        if len(chunk) != n:
            raise CorruptFileError(f"array {e['name']!r} truncated")
        arrays[e["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(e["shape"]).astype(np.float64)
    if set(arrays) != set(_MODEL_ARRAYS[method]):
        raise VersionError(f"model arrays {sorted(arrays)} do not match method {method!r}")
    total = sum(int(np.prod(e["shape"])) * 8 for e in entries)
    if total != len(payload):
        raise CorruptFileError(f"payload is {len(payload)} bytes, header declares {total}")
    if method == "trca":
        return TrcaModel(arrays["filters"], arrays["templates"], meta)
    return AdTrcaModel(arrays["temporal_filters"], arrays["filters"], arrays["templates"], meta)


def load_model(path, expected_method: str | None = None):
    return model_from_bytes(Path(path).read_bytes(), expected_method)
