"""Panel serialization: four UTF-8 CSVs plus a panel.json sidecar.

    events.csv              t,i,j
    edges.csv               i,j,t_on,t_off          one row per on-interval
    pair_covariates.csv     i,j,t,x1..xp            step change at t
    system_covariates.csv   t,z1..zd                step change at t

Times are decimal hours since the study origin. The sidecar records the
panel dimensions (n_vertices, directedness, horizon, covariate dimension)
that the CSVs alone cannot pin down, plus optional column names and vertex
labels. Output is deterministic: fixed row order, shortest round-trip float
formatting, no timestamps.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import PanelFormatError
from .model import SystemCovariates
from .panel import PairKey, PairPanel, PairRecord, build_panel
from .paths import PiecewisePath

FORMAT_VERSION = 1
SIDECAR = "panel.json"
EVENTS_CSV = "events.csv"
EDGES_CSV = "edges.csv"
PAIR_COV_CSV = "pair_covariates.csv"
SYSTEM_COV_CSV = "system_covariates.csv"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_panel(
    panel: PairPanel,
    directory,
    system: Optional[SystemCovariates] = None,
    covariate_names: Optional[list[str]] = None,
    system_names: Optional[list[str]] = None,
    vertex_labels: Optional[list] = None,
) -> list[Path]:
    """Write the CSV quartet and sidecar into a directory; returns paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    p = panel.covariate_dim
    if covariate_names is not None and len(covariate_names) != p:
        raise ValueError("covariate_names must match the covariate dimension")

    pairs = sorted(panel.pairs, key=lambda r: r.key)

    event_rows = sorted(
        (float(t), rec.key.i, rec.key.j) for rec in pairs for t in rec.events
    )
    _write_csv(
        directory / EVENTS_CSV,
        ["t", "i", "j"],
        ([_fmt(t), i, j] for t, i, j in event_rows),
    )

    def edge_rows():
        for rec in pairs:
            starts, ends = rec.edge.on_intervals(0.0, panel.horizon)
            for a, b in zip(starts, ends):
                yield [rec.key.i, rec.key.j, _fmt(a), _fmt(b)]

    _write_csv(directory / EDGES_CSV, ["i", "j", "t_on", "t_off"], edge_rows())

    cov_header = ["i", "j", "t"] + [
        covariate_names[k] if covariate_names else f"x{k + 1}" for k in range(p)
    ]

    def cov_rows():
        for rec in pairs:
            for t, row in zip(rec.covariates.breaks, rec.covariates.values):
                yield [rec.key.i, rec.key.j, _fmt(t)] + [_fmt(v) for v in row]

    _write_csv(directory / PAIR_COV_CSV, cov_header, cov_rows())

    d_sys = 0 if system is None else system.path.values.shape[1]
    sys_header = ["t"] + [
        (system_names or (system.names if system else None) or
         [f"z{k + 1}" for k in range(d_sys)])[k]
        for k in range(d_sys)
    ]

    def sys_rows():
        if system is None:
            return
        for t, row in zip(system.path.breaks, system.path.values):
            yield [_fmt(t)] + [_fmt(v) for v in row]

    _write_csv(directory / SYSTEM_COV_CSV, sys_header, sys_rows())

    meta = {
        "format_version": FORMAT_VERSION,
        "n_vertices": panel.n_vertices,
        "directed": panel.directed,
        "horizon": panel.horizon,
        "covariate_dim": p,
        "covariate_names": list(covariate_names) if covariate_names else None,
        "system_names": (
            list(system_names) if system_names
            else (list(system.names) if system is not None and system.names else None)
        ),
        "vertex_labels": list(vertex_labels) if vertex_labels is not None else None,
        "tie_adjustments": panel.tie_adjustments,
    }
    sidecar = directory / SIDECAR
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return [
        directory / EVENTS_CSV,
        directory / EDGES_CSV,
        directory / PAIR_COV_CSV,
        directory / SYSTEM_COV_CSV,
        sidecar,
    ]


class _RowReader:
    """CSV reader that reports file and line on every complaint."""

    def __init__(self, path: Path, expected_min_cols: int):
        self.path = path
        self.expected = expected_min_cols

    def fail(self, line: int, message: str):
        raise PanelFormatError(f"{self.path.name}:{line}: {message}")

    def rows(self):
        if not self.path.exists():
            raise PanelFormatError(f"missing required file {self.path.name}")
        with open(self.path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                self.fail(1, "empty file, expected a header row")
            if len(header) < self.expected:
                self.fail(1, f"header has {len(header)} columns, "
                             f"expected at least {self.expected}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    self.fail(lineno, f"expected {len(header)} fields, got {len(row)}")
                yield lineno, row

    def parse_float(self, line: int, text: str, what: str) -> float:
        try:
            value = float(text)
        except ValueError:
            self.fail(line, f"{what} is not a number: {text!r}")
        if not np.isfinite(value):
            self.fail(line, f"{what} is not finite: {text!r}")
        return value

    def parse_int(self, line: int, text: str, what: str) -> int:
        try:
            return int(text)
        except ValueError:
            self.fail(line, f"{what} is not an integer: {text!r}")


def _pair_error(filename: str, key: tuple[int, int],
                err: Exception) -> PanelFormatError:
    return PanelFormatError(f"{filename}: pair {key}: {err}")


def _read_sidecar(directory: Path) -> dict:
    path = directory / SIDECAR
    if not path.exists():
        raise PanelFormatError(f"missing required file {SIDECAR}")
    try:
        with open(path, encoding="utf-8") as fh:
            meta = json.load(fh)
    except json.JSONDecodeError as err:
        raise PanelFormatError(f"{SIDECAR}: invalid JSON: {err}") from err
    for field in ("n_vertices", "directed", "horizon", "covariate_dim"):
        if field not in meta:
            raise PanelFormatError(f"{SIDECAR}: missing field {field!r}")
    return meta


def read_panel(directory) -> tuple[PairPanel, Optional[SystemCovariates], dict]:
    """Load a panel directory; returns (panel, system covariates, sidecar)."""
    directory = Path(directory)
    meta = _read_sidecar(directory)
    n_vertices = int(meta["n_vertices"])
    directed = bool(meta["directed"])
    horizon = float(meta["horizon"])
    p = int(meta["covariate_dim"])

    events: dict[tuple[int, int], list[float]] = {}
    reader = _RowReader(directory / EVENTS_CSV, 3)
    for line, row in reader.rows():
        t = reader.parse_float(line, row[0], "event time")
        i = reader.parse_int(line, row[1], "vertex i")
        j = reader.parse_int(line, row[2], "vertex j")
        if not 0.0 <= t <= horizon:
            reader.fail(line, f"event time {t} outside [0, {horizon}]")
        events.setdefault((i, j), []).append(t)

    intervals: dict[tuple[int, int], list[tuple[float, float]]] = {}
    reader = _RowReader(directory / EDGES_CSV, 4)
    for line, row in reader.rows():
        i = reader.parse_int(line, row[0], "vertex i")
        j = reader.parse_int(line, row[1], "vertex j")
        a = reader.parse_float(line, row[2], "t_on")
        b = reader.parse_float(line, row[3], "t_off")
        if not 0.0 <= a < b <= horizon:
            reader.fail(line, f"bad on-interval [{a}, {b}] for horizon {horizon}")
        intervals.setdefault((i, j), []).append((a, b))

    cov_rows: dict[tuple[int, int], list[tuple[float, list[float]]]] = {}
    reader = _RowReader(directory / PAIR_COV_CSV, 3)
    for line, row in reader.rows():
        i = reader.parse_int(line, row[0], "vertex i")
        j = reader.parse_int(line, row[1], "vertex j")
        t = reader.parse_float(line, row[2], "covariate time")
        values = row[3:]
        if len(values) != p:
            reader.fail(line, f"expected {p} covariate values, got {len(values)}")
        x = [reader.parse_float(line, v, f"covariate x{k + 1}")
             for k, v in enumerate(values)]
        cov_rows.setdefault((i, j), []).append((t, x))

    sys_rows: list[tuple[float, list[float]]] = []
    sys_dim = None
    sys_path = directory / SYSTEM_COV_CSV
    if sys_path.exists():
        reader = _RowReader(sys_path, 1)
        for line, row in reader.rows():
            t = reader.parse_float(line, row[0], "system time")
            z = [reader.parse_float(line, v, f"system z{k + 1}")
                 for k, v in enumerate(row[1:])]
            if sys_dim is None:
                sys_dim = len(z)
            elif len(z) != sys_dim:
                reader.fail(line, "ragged system covariate rows")
            sys_rows.append((t, z))

    keys = sorted(set(events) | set(intervals) | set(cov_rows))
    records = []
    for i, j in keys:
        if not (0 <= i < n_vertices and 0 <= j < n_vertices):
            raise PanelFormatError(
                f"pair ({i}, {j}) outside vertex range 0..{n_vertices - 1}"
            )
        spans = sorted(intervals.get((i, j), []))
        try:
            edge = PiecewisePath.from_intervals(
                [a for a, _ in spans], [b for _, b in spans], horizon
            )
        except ValueError as err:
            raise _pair_error(EDGES_CSV, (i, j), err)
        rows = sorted(cov_rows.get((i, j), []), key=lambda r: r[0])
        if rows:
            breaks = np.asarray([t for t, _ in rows])
            values = np.asarray([x for _, x in rows], dtype=float).reshape(len(rows), p)
        else:
            breaks = np.zeros(1)
            values = np.zeros((1, p))
        try:
            covariates = PiecewisePath(breaks, values)
        except ValueError as err:
            raise _pair_error(PAIR_COV_CSV, (i, j), err)
        records.append(
            PairRecord(
                key=PairKey(i, j),
                edge=edge,
                covariates=covariates,
                events=np.sort(np.asarray(events.get((i, j), []), dtype=float)),
            )
        )

    try:
        panel = build_panel(records, n_vertices=n_vertices, directed=directed,
                            horizon=horizon)
    except ValueError as err:
        raise PanelFormatError(str(err)) from err
    prior = int(meta.get("tie_adjustments", 0) or 0)
    if prior:
        panel = dataclasses.replace(
            panel, tie_adjustments=panel.tie_adjustments + prior
        )

    system = None
    if sys_rows:
        sys_rows.sort(key=lambda r: r[0])
        try:
            path = PiecewisePath(
                np.asarray([t for t, _ in sys_rows]),
                np.asarray([z for _, z in sys_rows], dtype=float),
            )
        except ValueError as err:
            raise PanelFormatError(f"{SYSTEM_COV_CSV}: {err}") from err
        names = meta.get("system_names")
        system = SystemCovariates(path=path, names=tuple(names) if names else None)

    return panel, system, meta
