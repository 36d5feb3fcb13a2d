"""CSV series input, truth edge lists, curve dumps and JSON results."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .embedding import ScalarSeries
from .errors import ParseError
from .inference import CausalityResult

# 17 significant digits reproduce any double exactly
FLOAT_FMT = "%.17g"


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def _parse_float(cell: str) -> float | None:
    try:
        return float(cell)
    except ValueError:
        return None


def read_series_csv(
    path,
    columns: Sequence[str] | None = None,
    index_col: str | None = None,
    header: bool | None = None,
) -> list[ScalarSeries]:
    """One series per selected column of a comma-separated file.

    ``header=None`` treats the first row as a header when any of its cells
    is not a number. Headerless columns are named ``x1, x2, ...``.
    ``index_col`` names a column (for example a time stamp) to drop.
    Row numbers in error messages are 1-based file lines.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    first_line, first = rows[0]
    if header is None:
        header = any(_parse_float(c) is None for c in first)
    if header:
        names = [c.strip() for c in first]
        body = rows[1:]
        if len(set(names)) != len(names):
            raise ParseError(f"{path}:{first_line}: duplicate column names {names}")
    else:
        names = [f"x{i + 1}" for i in range(len(first))]
        body = rows
    if not body:
        raise ParseError(f"{path}: no data rows")
    width = len(names)
    data = np.empty((len(body), width))
    for r, (line, row) in enumerate(body):
        if len(row) != width:
            raise ParseError(f"{path}:{line}: expected {width} fields, found {len(row)}")
        for c, cell in enumerate(row):
            value = _parse_float(cell.strip())
            if value is None:
                raise ParseError(f"{path}:{line}: column {names[c]!r}: not a number: {cell!r}")
            if not math.isfinite(value):
                raise ParseError(f"{path}:{line}: column {names[c]!r}: non-finite value {cell.strip()!r}")
            data[r, c] = value

    if index_col is not None and index_col not in names:
        raise ParseError(f"{path}: index column {index_col!r} not found in {names}")
    if columns is None:
        columns = [n for n in names if n != index_col]
    missing = [c for c in columns if c not in names]
    if missing:
        raise ParseError(f"{path}: columns not found: {missing} (have {names})")
    return [ScalarSeries(data[:, names.index(c)].copy(), c) for c in columns]


def write_series_csv(path, series: Sequence[ScalarSeries]) -> None:
    lengths = {len(s) for s in series}
    if len(lengths) != 1:
        raise ValueError(f"series lengths differ: {sorted(lengths)}")
    table = np.column_stack([s.values for s in series])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([s.label for s in series])
        for row in table:
            w.writerow([_fmt(x) for x in row])


def read_truth(path) -> set[tuple[str, str]]:
    """Edges from a file with one ``src->dst`` per line (``#`` starts a comment)."""
    edges = set()
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            src, sep, dst = line.partition("->")
            src, dst = src.strip(), dst.strip()
            if not sep or not src or not dst or "->" in dst:
                raise ParseError(f"{path}:{i}: expected 'src->dst', got {raw.rstrip()!r}")
            edges.add((src, dst))
    return edges


def write_truth(path, edges: Iterable[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for src, dst in sorted(edges):
            fh.write(f"{src}->{dst}\n")


def write_curve_dump(path, result: CausalityResult) -> None:
    """Scaling curve of one direction as a plotter-ready CSV."""
    curve = result.curve
    in_fit = result.fit.in_fit(curve.grid.count)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# cause={result.cause} effect={result.effect}\n")
        fh.write(f"# slope={_fmt(result.fit.slope)} intercept={_fmt(result.fit.intercept)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "eps", "log_eps", "delta", "count", "in_fit"])
        for j in range(curve.grid.count):
            w.writerow([
                j,
                _fmt(curve.grid.values[j]),
                _fmt(curve.log_eps[j]),
                _fmt(curve.deltas[j]),
                int(curve.populated[j]),
                int(in_fit[j]),
            ])


def read_curve_dump(path) -> dict:
    meta = {}
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                for item in line[1:].split():
                    k, _, v = item.partition("=")
                    meta[k] = v
            else:
                rows.append(line)
    table = list(csv.DictReader(rows))
    return {
        "cause": meta.get("cause"),
        "effect": meta.get("effect"),
        "slope": float(meta["slope"]),
        "intercept": float(meta["intercept"]),
        "eps": np.array([float(r["eps"]) for r in table]),
        "log_eps": np.array([float(r["log_eps"]) for r in table]),
        "delta": np.array([float(r["delta"]) for r in table]),
        "count": np.array([int(r["count"]) for r in table]),
        "in_fit": np.array([bool(int(r["in_fit"])) for r in table]),
    }


def result_record(r: CausalityResult) -> dict:
    return {
        "cause": r.cause,
        "effect": r.effect,
        "slope": r.slope,
        "intercept": r.fit.intercept,
        "residual_rms": r.fit.residual_rms,
        "p_value": r.p_value,
        "significant": bool(r.significant),
        "surrogate_mean": r.test.mean,
        "surrogate_std": r.test.std,
        "surrogate_slopes": [float(x) for x in r.test.surrogate_slopes],
        "fit_indices": [int(j) for j in r.fit.fit_indices],
        "n_used": int(r.curve.n_used),
    }


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def software_versions() -> dict:
    import numba
    import scipy

    from . import __version__

    return {
        "contscale": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


@dataclass
class RunManifest:
    """What is needed to repeat a run: the command, its resolved options,
    input provenance, software versions and timing."""

    command: str
    options: dict
    config: dict | None = None
    inputs: list = field(default_factory=list)
    versions: dict = field(default_factory=software_versions)
    timing: dict = field(default_factory=dict)

    def add_input(self, path, columns: Sequence[str], rows: int) -> None:
        self.inputs.append({
            "path": os.path.abspath(path),
            "sha256": file_digest(path),
            "columns": list(columns),
            "rows": rows,
        })

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "options": self.options,
            "config": self.config,
            "inputs": self.inputs,
            "versions": self.versions,
            "timing": self.timing,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> RunManifest:
        return cls(d["command"], dict(d["options"]), d.get("config"), list(d.get("inputs", [])),
                   dict(d.get("versions", {})), dict(d.get("timing", {})))


def write_json(path, payload: Mapping) -> None:
    # json writes floats with repr, which round-trips doubles exactly
    text = json.dumps(payload, indent=2, allow_nan=True)
    if path is None or str(path) == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from exc


def read_config_file(path) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ParseError(f"{path}:{i}: expected 'key = value', got {raw.rstrip()!r}")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def read_scores_csv(path) -> dict[tuple[str, str], float]:
    """Scores from ``cause,effect,score`` rows (header optional)."""
    scores = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh), 1):
            if not row or not any(c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{i}: expected 'cause,effect,score'")
            value = _parse_float(row[2].strip())
            if value is None:
                if i == 1:
                    continue
                raise ParseError(f"{path}:{i}: score is not a number: {row[2]!r}")
            scores[(row[0].strip(), row[1].strip())] = value
    return scores
