"""Artifact readers and writers: plain CSV and JSON, byte-deterministic.

Numbers are written with repr, the shortest digit string that round-trips
the exact float, so rereading an artifact reproduces the run bit for bit.
All files use '.' decimals, '\\n' newlines, UTF-8.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from stefanlab.errors import ConfigError
from stefanlab.fields import Field, FrontierPath, JumpRecord, WeightField


def _fmt(v) -> str:
    return repr(float(v))


def _open_w(path):
    return open(path, "w", encoding="utf-8", newline="\n")


def write_frontier_csv(path, frontier: FrontierPath) -> None:
    with _open_w(path) as fh:
        fh.write("t,lambda\n")
        for tv, lv in zip(frontier.times, frontier.lam):
            fh.write(f"{_fmt(tv)},{_fmt(lv)}\n")


def read_frontier_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path, expected_header="t,lambda")
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ConfigError(f"{path}: expected two columns")
    return data[:, 0], data[:, 1]


def write_matrix_csv(path, x: np.ndarray, t: np.ndarray, values: np.ndarray) -> None:
    """Matrix layout: first row holds x, first column holds t, corner is nan."""
    if values.shape != (len(t), len(x)):
        raise ConfigError("matrix shape does not match axes")
    with _open_w(path) as fh:
        fh.write("nan," + ",".join(_fmt(v) for v in x) + "\n")
        for k, tv in enumerate(t):
            fh.write(_fmt(tv) + "," + ",".join(_fmt(v) for v in values[k]) + "\n")


def read_matrix_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ConfigError(f"{path}: empty matrix file")
    head = lines[0].split(",")
    if head[0] != "nan":
        raise ConfigError(f"{path}: corner cell must be nan")
    x = np.array(head[1:], dtype=float)
    t = np.empty(len(lines) - 1)
    values = np.empty((len(lines) - 1, len(x)))
    for k, line in enumerate(lines[1:]):
        parts = line.split(",")
        t[k] = float(parts[0])
        values[k] = [float(p) for p in parts[1:]]
    return x, t, values


def write_nu_csv(path, nu: WeightField) -> None:
    rec = nu.recorded if nu.recorded is not None else np.ones(len(nu.x), dtype=bool)
    with _open_w(path) as fh:
        fh.write("x,nu,recorded\n")
        for xv, nv, rv in zip(nu.x, nu.nu, rec):
            fh.write(f"{_fmt(xv)},{_fmt(nv)},{int(rv)}\n")


def read_nu_csv(path, alpha: float) -> WeightField:
    rows = _read_rows(path, expected_header="x,nu,recorded")
    data = np.array(rows, dtype=float)
    return WeightField(x=data[:, 0], nu=data[:, 1], alpha=alpha,
                       recorded=data[:, 2].astype(bool))


def write_profile_csv(path, profile) -> None:
    with _open_w(path) as fh:
        fh.write("x,s,s_prime,label,boundary_value\n")
        for xv, sv, spv, lb, bv in zip(profile.x, profile.s, profile.s_prime,
                                       profile.labels, profile.boundary_value):
            fh.write(f"{_fmt(xv)},{_fmt(sv)},{_fmt(spv)},{lb},{_fmt(bv)}\n")


def read_profile_csv(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "x,s,s_prime,label,boundary_value":
        raise ConfigError(f"{path}: unexpected profile header")
    x, s, sp, labels, bv = [], [], [], [], []
    for line in lines[1:]:
        parts = line.split(",")
        x.append(float(parts[0]))
        s.append(float(parts[1]))
        sp.append(float(parts[2]))
        labels.append(parts[3])
        bv.append(float(parts[4]))
    return {"x": np.array(x), "s": np.array(s), "s_prime": np.array(sp),
            "labels": labels, "boundary_value": np.array(bv)}


def jsonify(obj):
    """Make an object JSON-safe: numpy scalars to python, non-finite to None."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return obj


def write_json(path, obj) -> None:
    with _open_w(path) as fh:
        json.dump(jsonify(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_jumps_json(path, jumps: list[JumpRecord]) -> None:
    write_json(path, [rec.to_dict() for rec in jumps])


def read_jumps_json(path) -> list[JumpRecord]:
    raw = read_json(path)
    out = []
    for item in raw:
        out.append(JumpRecord(
            t=item["t"], lambda_minus=item["lambda_minus"],
            lambda_plus=item["lambda_plus"], mass=item.get("mass", 0.0),
            pre_jump_boundary_value=(item.get("pre_jump_boundary_value")
                                     if item.get("pre_jump_boundary_value") is not None
                                     else float("nan"))))
    return out


def write_field_artifacts(outdir, frontier: FrontierPath, field: Field,
                          nu: WeightField | None = None,
                          w=None, profile=None) -> None:
    """Write the per-run artifact set into outdir (created if needed)."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_frontier_csv(out / "frontier.csv", frontier)
    write_matrix_csv(out / "field.csv", field.x, field.t, field.values)
    write_jumps_json(out / "jumps.json", frontier.jumps)
    if nu is not None:
        write_nu_csv(out / "nu.csv", nu)
    if w is not None:
        write_matrix_csv(out / "w.csv", w.x, w.t, w.w)
    if profile is not None:
        write_profile_csv(out / "profile.csv", profile)


def _read_rows(path, expected_header: str) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != expected_header:
        raise ConfigError(f"{path}: expected header {expected_header!r}")
    return [line.split(",") for line in lines[1:]]
