"""CSV score tables and JSON model files.

Score CSV: header ``id,label,<voter_1>,...,<voter_n>``, labels -1 or 1.

Model file: JSON object ``{"format": "fusionq-model", "version": 1,
"checksum": <sha256 hex>, "payload": {...}}``. Reals in the payload are
decimal strings with 17 significant digits, which round-trip binary64
exactly. The checksum is the SHA-256 of the payload serialised with sorted
keys and compact separators.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .exceptions import ChecksumError, DataError, FormatVersionError
from .kernel import KernelLayer
from .types import FusionModel, ScoreMatrix, VoterWeights

FORMAT = "fusionq-model"
VERSION = 1


def read_scores(path) -> ScoreMatrix:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "id" or header[1] != "label":
            raise DataError(f"{path}:1: header must be id,label,<voter>,...")
        voters = header[2:]
        ids, labels, rows, seen = [], [], [], set()
        for record in reader:
            line = reader.line_num
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != len(header):
                raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(record)}")
            ex_id = record[0].strip()
            if ex_id in seen:
                raise DataError(f"{path}:{line}: duplicate id {ex_id!r}")
            seen.add(ex_id)
            label = record[1].strip()
            if label not in ("1", "-1", "+1"):
                raise DataError(f"{path}:{line}: label must be -1 or 1, got {label!r}")
            values = []
            for col, field in zip(voters, record[2:]):
                try:
                    v = float(field)
                except ValueError:
                    raise DataError(f"{path}:{line}: column {col!r}: not a number: {field!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{line}: column {col!r}: non-finite score {field!r}")
                values.append(v)
            ids.append(ex_id)
            labels.append(int(label))
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return ScoreMatrix(np.array(rows), np.array(labels), voters, ids)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_scores(s: ScoreMatrix, path) -> None:
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", *s.voter_names])
        for ex_id, label, row in zip(s.example_ids, s.labels, s.scores):
            w.writerow([ex_id, int(label), *(_fmt(v) for v in row)])

    atomic_write(path, emit)


def atomic_write(path, emit) -> None:
    """Write via ``emit(file)`` to a temporary sibling, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            emit(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _vec(a):
    return [_fmt(v) for v in np.asarray(a, dtype=float).ravel()]


def _unvec(values, shape=None):
    a = np.array([float(v) for v in values], dtype=float)
    return a.reshape(shape) if shape is not None else a


def model_payload(model: FusionModel) -> dict:
    payload = {
        "algorithm": model.algorithm,
        "voter_names": list(model.voter_names),
        "hyperparams": {k: _fmt(v) for k, v in sorted(model.hyperparams.items())},
    }
    if isinstance(model.weights, VoterWeights):
        payload["weights"] = {"q_prime": _vec(model.weights.q_prime), "q": _vec(model.weights.q)}
    else:
        payload["weights"] = {"w": _vec(model.weights)}
    if model.kernel is not None:
        k = model.kernel
        payload["kernel"] = {
            "type": "rbf",
            "gamma": _fmt(k.gamma),
            "anchor_count": k.anchor_count,
            "anchors": _vec(k.anchors),
            "anchor_ids": list(k.anchor_ids),
            "mean": _vec(k.mean),
            "std": _vec(k.std),
            "voter_names": list(k.voter_names),
        }
    return payload


def _checksum(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def dumps_model(model: FusionModel) -> str:
    payload = model_payload(model)
    doc = {"format": FORMAT, "version": VERSION, "checksum": _checksum(payload), "payload": payload}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads_model(text: str) -> FusionModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise DataError("not a fusionq model file")
    if doc.get("version") != VERSION:
        raise FormatVersionError(f"model format version {doc.get('version')!r}, expected {VERSION}")
    payload = doc.get("payload")
    if _checksum(payload) != doc.get("checksum"):
        raise ChecksumError("model checksum mismatch")
    try:
        w = payload["weights"]
        if "q_prime" in w:
            weights = VoterWeights(_unvec(w["q_prime"]), _unvec(w["q"]))
        else:
            weights = _unvec(w["w"])
        layer = None
        if "kernel" in payload:
            k = payload["kernel"]
            n_base = len(k["voter_names"])
            layer = KernelLayer(
                gamma=float(k["gamma"]),
                anchors=_unvec(k["anchors"], (int(k["anchor_count"]), n_base)),
                mean=_unvec(k["mean"]),
                std=_unvec(k["std"]),
                voter_names=tuple(k["voter_names"]),
                anchor_ids=tuple(k["anchor_ids"]),
            )
        return FusionModel(
            algorithm=payload["algorithm"],
            weights=weights,
            voter_names=tuple(payload["voter_names"]),
            hyperparams={key: float(v) for key, v in payload["hyperparams"].items()},
            kernel=layer,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model payload: {exc}") from exc


def write_model(model: FusionModel, path) -> None:
    text = dumps_model(model)
    atomic_write(path, lambda fh: fh.write(text))


def read_model(path) -> FusionModel:
    return loads_model(Path(path).read_text())


def read_metric_file(path) -> dict:
    """Per-concept metric CSV with header ``concept,<metric>`` -> {concept: value}."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) != 2 or header[0].strip() != "concept":
            raise DataError(f"{path}:1: header must be concept,<metric>")
        out = {}
        for record in reader:
            if not record:
                continue
            if len(record) != 2:
                raise DataError(f"{path}:{reader.line_num}: expected 2 fields")
            try:
                value = float(record[1])
            except ValueError:
                raise DataError(f"{path}:{reader.line_num}: not a number: {record[1]!r}") from None
            concept = record[0].strip()
            if concept in out:
                raise DataError(f"{path}:{reader.line_num}: duplicate concept {concept!r}")
            out[concept] = value
    return out


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")
