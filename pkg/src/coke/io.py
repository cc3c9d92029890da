"""File formats: flat key = value configs, covariate CSVs, and JSON model files."""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .errors import InvalidInput
from .kernel import KernelSpec
from .krr import KrrModel, LabeledDataset, UnlabeledDataset
from .learners import AverageCate, CateModel, DifferenceCate, RegularizerTriple, SingleCate

MODEL_FORMAT = "coke-model"
MODEL_VERSION = 1


class ConfigError(InvalidInput):
    """Config text could not be parsed; ``problems`` lists ``(line, message)`` pairs."""

    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        super().__init__("; ".join(f"line {ln}: {msg}" for ln, msg in problems))


def parse_config(text: str, allowed: set[str] | None = None) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown or repeated keys are errors."""
    out: dict[str, str] = {}
    problems = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            problems.append((ln, f"expected 'key = value', got {raw.strip()!r}"))
        elif allowed is not None and key not in allowed:
            problems.append((ln, f"unknown key {key!r}"))
        elif key in out:
            problems.append((ln, f"duplicate key {key!r}"))
        else:
            out[key] = value
    if problems:
        raise ConfigError(problems)
    return out


def read_config(path, allowed: set[str] | None = None) -> dict[str, str]:
    return parse_config(Path(path).read_text(), allowed)


def _read_table(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidInput(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    try:
        data = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    if body and (data.ndim != 2 or data.shape[1] != len(header)):
        raise InvalidInput(f"{path}: ragged rows")
    return header, data.reshape(len(body), len(header))


def _covariate_columns(header: list[str], path) -> list[int]:
    zcols = {int(m.group(1)): i for i, h in enumerate(header) if (m := re.fullmatch(r"z(\d+)", h))}
    p = len(zcols)
    if p == 0 or sorted(zcols) != list(range(1, p + 1)):
        raise InvalidInput(f"{path}: covariate columns must be z1..zp")
    return [zcols[j] for j in range(1, p + 1)]


def read_labeled(path) -> LabeledDataset:
    """CSV with columns z1..zp, a, y."""
    header, data = _read_table(path)
    cols = _covariate_columns(header, path)
    for name in ("a", "y"):
        if name not in header:
            raise InvalidInput(f"{path}: missing column {name!r}")
    return LabeledDataset(data[:, cols], data[:, header.index("a")], data[:, header.index("y")])


def read_unlabeled(path) -> UnlabeledDataset:
    """CSV with columns z1..zp (other columns are ignored)."""
    header, data = _read_table(path)
    if len(data) == 0:
        raise InvalidInput(f"{path}: no rows")
    return UnlabeledDataset(data[:, _covariate_columns(header, path)])


def _num(v) -> str:
    return repr(float(v))


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in r])


def write_labeled(path, D: LabeledDataset) -> None:
    header = [f"z{j + 1}" for j in range(D.p)] + ["a", "y"]
    write_csv(path, header, ([*map(float, z), int(a), float(y)] for z, a, y in zip(D.Z, D.a, D.y)))


def write_unlabeled(path, Z) -> None:
    Z = np.asarray(Z, dtype=float)
    write_csv(path, [f"z{j + 1}" for j in range(Z.shape[1])], ([*map(float, z)] for z in Z))


# model files


def model_to_dict(model: CateModel) -> dict:
    if isinstance(model, KrrModel):
        return {"type": "krr", "kernel": model.spec.to_dict(), "lam": model.lam,
                "support": model.support.tolist(), "dual_weights": model.dual_weights.tolist()}
    if isinstance(model, SingleCate):
        lam = None if model.lam is None else [model.lam.lam00, model.lam.lam01, model.lam.lam1]
        return {"type": "single", "lam": lam, "h": model_to_dict(model.h)}
    if isinstance(model, DifferenceCate):
        return {"type": "difference", "f1": model_to_dict(model.f1), "f0": model_to_dict(model.f0)}
    if isinstance(model, AverageCate):
        return {"type": "average", "members": [model_to_dict(m) for m in model.members]}
    raise InvalidInput(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("type")
    if kind == "krr":
        support = np.asarray(d["support"], dtype=float)
        return KrrModel(support.reshape(len(support), -1), np.asarray(d["dual_weights"], dtype=float),
                        KernelSpec.from_dict(d["kernel"]), d.get("lam"))
    if kind == "single":
        lam = d.get("lam")
        return SingleCate(model_from_dict(d["h"]), None if lam is None else RegularizerTriple(*lam))
    if kind == "difference":
        return DifferenceCate(model_from_dict(d["f1"]), model_from_dict(d["f0"]))
    if kind == "average":
        return AverageCate(tuple(model_from_dict(m) for m in d["members"]))
    raise InvalidInput(f"unknown model node type {kind!r}")


def save_model(path, model: CateModel, method: str = "coke", meta: dict | None = None) -> None:
    doc = {"format": MODEL_FORMAT, "version": MODEL_VERSION, "method": method,
           "meta": meta or {}, "model": model_to_dict(model)}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path) -> tuple[CateModel, dict]:
    """Returns the model and the file's top-level fields (method, meta, version)."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not a model file ({exc})") from None
    if doc.get("format") != MODEL_FORMAT:
        raise InvalidInput(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise InvalidInput(f"{path}: unsupported model file version {doc.get('version')}")
    info = {k: v for k, v in doc.items() if k != "model"}
    return model_from_dict(doc["model"]), info
