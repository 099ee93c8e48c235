"""Instance file loading, schema validation and deterministic output writing."""

import csv
import hashlib
import json
import os
import tempfile
from importlib import resources

import jsonschema
import numpy as np

from .qkl import QklInstance
from .qlqr import QlqrInstance
from .troc import FiniteTrocInstance

__all__ = [
    "InstanceError",
    "load_instance",
    "validate_instance_dict",
    "atomic_write_text",
    "write_csv",
    "write_json",
    "file_checksum",
]

OUTPUT_DIR_ENV = "QOC_OUT_DIR"


class InstanceError(ValueError):
    """Malformed or schema-invalid instance file."""


def _schema():
    with resources.files("qoc.schemas").joinpath("instance.schema.json").open() as fh:
        return json.load(fh)


def validate_instance_dict(doc):
    """Schema-check a parsed instance document; raises InstanceError."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        raise InstanceError(f"invalid instance at {exc.json_path}: {exc.message}") from exc


def load_instance(path, overrides=None):
    """Load, validate and build an instance; returns (kind, instance).

    ``overrides`` may set q, lambda, horizon; command-line values take
    precedence over the file's fields.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InstanceError(f"cannot read instance file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise InstanceError("instance file must contain a JSON object")
    doc = dict(doc)
    for key in ("q", "lambda", "horizon"):
        if overrides and overrides.get(key) is not None:
            doc[key] = overrides[key]
    validate_instance_dict(doc)
    kind = doc["kind"]
    common = dict(horizon=int(doc["horizon"]), lam=float(doc["lambda"]), q=float(doc["q"]))
    try:
        if kind == "qkl":
            return kind, QklInstance(
                np.asarray(doc["passive_matrix"], dtype=float),
                np.asarray(doc["state_cost"], dtype=float),
                initial=doc.get("initial"),
                **common,
            )
        if kind == "troc":
            return kind, FiniteTrocInstance(
                np.asarray(doc["kernel"], dtype=float),
                np.asarray(doc["stage_cost"], dtype=float),
                np.asarray(doc["terminal_cost"], dtype=float),
                **common,
            )
        return kind, QlqrInstance(
            doc["a"],
            doc["b"],
            doc["q_cost"],
            doc["s_cost"],
            doc["r_cost"],
            doc["terminal_cost"],
            initial_state=doc.get("initial_state"),
            **common,
        )
    except ValueError as exc:
        raise InstanceError(f"invalid {kind} instance: {exc}") from exc


def fmt(x):
    """Serialize a float with 17 significant digits (lossless round trip)."""
    return format(float(x), ".17g")


def atomic_write_text(path, text):
    """Write via a temp file and rename, so partial files never appear."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    """Atomic CSV write; numeric cells serialized with 17 significant digits."""
    import io as _io

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(c) if isinstance(c, (int, float, np.floating)) else c for c in row])
    atomic_write_text(path, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path, payload):
    atomic_write_text(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def file_checksum(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()
