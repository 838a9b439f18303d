"""Reading and writing point sets, fit results, trajectories and density grids.

Points are exchanged as JSON lines, one object per point::

    {"model": "ball", "coords": [0.1, -0.2, 0.3]}

with complex coordinates flattened to ``re, im`` pairs, or as headerless CSV
with one point per row in the same real coordinates. Floats are written
with 17 significant digits so that a round trip is exact.
"""
from __future__ import annotations

import csv
import io
import json
import math
from typing import IO, Iterable

import numpy as np

from .exceptions import DomainError
from .geometry import Model, get_model

__all__ = [
    "fmt_float",
    "write_points",
    "read_points",
    "dumps_json",
    "write_trajectory_csv",
    "write_density_grid_csv",
]

FORMATS = ("jsonl", "csv")


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def dumps_json(obj) -> str:
    """JSON text with every float written to 17 significant digits.

    Handles the plain containers used by the CLI (dicts, lists, strings,
    numbers, booleans and None); non-finite floats become ``null``.
    """
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {dumps_json(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
    if isinstance(obj, (bool, type(None), str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj) if math.isfinite(obj) else "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_points(stream: IO[str], model: Model, X, fmt: str = "jsonl") -> None:
    V = np.atleast_2d(model.to_real(X))
    if fmt == "jsonl":
        for row in V:
            stream.write(dumps_json({"model": model.name, "coords": [float(v) for v in row]}))
            stream.write("\n")
    elif fmt == "csv":
        for row in V:
            stream.write(",".join(fmt_float(v) for v in row))
            stream.write("\n")
    else:
        raise DomainError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def _infer_model(name: str, n_coords: int, dim: int | None) -> Model:
    if dim is not None:
        model = get_model(name, dim)
    elif name == "disc":
        model = get_model("disc")
    elif name == "ball":
        model = get_model("ball", n_coords)
    elif name == "bergman":
        if n_coords % 2:
            raise DomainError("Bergman coordinates come in re, im pairs")
        model = get_model("bergman", n_coords // 2)
    else:
        model = get_model(name)
    if model.real_dim != n_coords:
        raise DomainError(f"{model} needs {model.real_dim} coordinates per point, got {n_coords}")
    return model


def _guess_format(text: str) -> str:
    first = text.lstrip()[:1]
    return "jsonl" if first == "{" else "csv"


def read_points(stream: IO[str], model_name: str | None = None, dim: int | None = None,
                fmt: str | None = None):
    """Parse a point file; returns ``(model, X)``.

    For JSON lines the model is taken from the records (and must agree with
    ``model_name`` when both are given); CSV input needs ``model_name``.
    The dimension is inferred from the coordinate count unless ``dim`` is set.
    """
    text = stream.read()
    fmt = fmt or _guess_format(text)
    rows: list[list[float]] = []
    names = set()
    if fmt == "jsonl":
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                coords = [float(v) for v in rec["coords"]]
                names.add(str(rec.get("model", model_name)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DomainError(f"line {lineno}: malformed point record ({exc})") from exc
            rows.append(coords)
    elif fmt == "csv":
        for lineno, rec in enumerate(csv.reader(io.StringIO(text)), 1):
            if not rec or not "".join(rec).strip():
                continue
            try:
                rows.append([float(v) for v in rec])
            except ValueError as exc:
                raise DomainError(f"line {lineno}: non-numeric coordinate ({exc})") from exc
    else:
        raise DomainError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if not rows:
        raise DomainError("no points in input")
    if model_name is not None:
        names.add(model_name)
    names.discard("None")
    if len(names) != 1:
        raise DomainError(f"input must name exactly one model, found {sorted(names) or 'none'}")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DomainError("points have differing coordinate counts")
    model = _infer_model(names.pop(), widths.pop(), dim)
    X = model.check_points(model.from_real(np.asarray(rows, dtype=float)))
    return model, X


def _write_rows(stream: IO[str], header: Iterable[str], rows: Iterable[Iterable]) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join("" if v is None else (v if isinstance(v, str) else fmt_float(v))
                              for v in row))
        stream.write("\n")


def write_trajectory_csv(stream: IO[str], model: Model, traj) -> None:
    """One row per sample time: ``t``, every coordinate, potential, residual, drift."""
    n = traj.states.shape[1]
    k = model.real_dim
    header = ["t"] + [f"p{i}_{j}" for i in range(n) for j in range(k)]
    header += ["potential", "residual", "drift"]
    rows = (
        [t, *np.ravel(model.to_real(Y)), e, r, d]
        for t, Y, e, r, d in zip(traj.times, traj.states, traj.energies,
                                 traj.residuals, traj.drift)
    )
    _write_rows(stream, header, rows)


def write_density_grid_csv(stream: IO[str], model: Model, xs, ys, dens) -> None:
    """Rows ``x, y, density, lebesgue_density``; cells outside the ball stay empty.

    ``density`` is with respect to the hyperbolic measure and
    ``lebesgue_density`` with respect to Lebesgue measure of the full ball,
    evaluated at the slice points.
    """
    def rows():
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                p = dens[i, j]
                if np.isnan(p):
                    yield [x, y, None, None]
                else:
                    r2 = x * x + y * y
                    yield [x, y, p, p * (1.0 - r2) ** (-model.measure_exponent)]
    _write_rows(stream, ["x", "y", "density", "lebesgue_density"], rows())
