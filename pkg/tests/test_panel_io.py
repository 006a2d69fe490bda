import dataclasses
import json
from pathlib import Path

import numpy as np
import pytest

from netbaseline.errors import PanelFormatError
from netbaseline.model import SystemCovariates, constant_baseline
from netbaseline.panel import PairKey, PairRecord, build_panel
from netbaseline.panel_io import read_panel, write_panel
from netbaseline.paths import PiecewisePath
from netbaseline.simulate import SimConfig, simulate_study


def tiny_panel():
    records = [
        PairRecord(
            key=PairKey(0, 1),
            edge=PiecewisePath.from_intervals([0.0], [8.0], horizon=10.0),
            covariates=PiecewisePath(np.array([0.0, 4.0]), np.array([[1.0], [2.0]])),
            events=np.array([1.5, 6.25]),
        ),
        PairRecord(
            key=PairKey(1, 2),
            edge=PiecewisePath.from_intervals([2.0], [10.0], horizon=10.0),
            covariates=PiecewisePath.constant([0.5]),
            events=np.array([3.0]),
        ),
    ]
    return build_panel(records, n_vertices=3, directed=False, horizon=10.0)


def simulated_panel(seed=13):
    config = SimConfig(
        n_vertices=6, horizon=36.0, theta=(np.log(0.4),), beta=(0.5, -0.3),
        baseline=constant_baseline(), edge_on_rate=0.5, edge_off_rate=0.3,
        covariate_jump_rate=0.2, seed=seed,
    )
    panel, _ = simulate_study(config)
    return panel


def assert_panels_equal(a, b):
    assert a.n_vertices == b.n_vertices
    assert a.directed == b.directed
    assert a.horizon == b.horizon
    assert len(a.pairs) == len(b.pairs)
    for ra, rb in zip(a.pairs, b.pairs):
        assert ra.key == rb.key
        assert np.array_equal(ra.events, rb.events)
        sa, ea = ra.edge.on_intervals(0.0, a.horizon)
        sb, eb = rb.edge.on_intervals(0.0, b.horizon)
        assert np.array_equal(sa, sb) and np.array_equal(ea, eb)
        t = np.linspace(0.0, a.horizon, 101)
        assert np.array_equal(ra.covariates.at(t), rb.covariates.at(t))


class TestRoundTrip:
    def test_tiny_panel(self, tmp_path):
        panel = tiny_panel()
        write_panel(panel, tmp_path)
        loaded, system, meta = read_panel(tmp_path)
        assert_panels_equal(panel, loaded)
        assert system is None
        assert meta["covariate_dim"] == 1

    def test_simulated_panel(self, tmp_path):
        panel = simulated_panel()
        write_panel(panel, tmp_path)
        loaded, _, _ = read_panel(tmp_path)
        assert_panels_equal(panel, loaded)

    def test_system_covariates(self, tmp_path):
        panel = tiny_panel()
        system = SystemCovariates(
            path=PiecewisePath(np.array([0.0, 5.0]),
                               np.array([[2.0, 0.0], [2.5, 1.0]])),
            names=("log_temperature", "precipitation"),
        )
        write_panel(panel, tmp_path, system=system)
        _, loaded, meta = read_panel(tmp_path)
        assert loaded is not None
        assert loaded.names == ("log_temperature", "precipitation")
        assert np.array_equal(loaded.path.breaks, system.path.breaks)
        assert np.array_equal(loaded.path.values, system.path.values)

    def test_tie_adjustments_accumulate(self, tmp_path):
        panel = dataclasses.replace(tiny_panel(), tie_adjustments=3)
        write_panel(panel, tmp_path)
        loaded, _, meta = read_panel(tmp_path)
        assert meta["tie_adjustments"] == 3
        assert loaded.tie_adjustments == 3

    def test_vertex_labels_in_sidecar(self, tmp_path):
        write_panel(tiny_panel(), tmp_path, vertex_labels=["a", "b", "c"])
        meta = json.loads((tmp_path / "panel.json").read_text())
        assert meta["vertex_labels"] == ["a", "b", "c"]


class TestDeterministicOutput:
    def test_bytes_identical_across_writes(self, tmp_path):
        panel = simulated_panel()
        d1, d2 = tmp_path / "one", tmp_path / "two"
        write_panel(panel, d1)
        write_panel(panel, d2)
        for name in ("events.csv", "edges.csv", "pair_covariates.csv",
                     "system_covariates.csv", "panel.json"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_events_sorted_by_time(self, tmp_path):
        write_panel(tiny_panel(), tmp_path)
        lines = (tmp_path / "events.csv").read_text().strip().split("\n")
        times = [float(line.split(",")[0]) for line in lines[1:]]
        assert times == sorted(times)

    def test_named_covariate_header(self, tmp_path):
        write_panel(tiny_panel(), tmp_path, covariate_names=["distance"])
        header = (tmp_path / "pair_covariates.csv").read_text().split("\n")[0]
        assert header == "i,j,t,distance"

    def test_name_length_checked(self, tmp_path):
        with pytest.raises(ValueError, match="covariate_names"):
            write_panel(tiny_panel(), tmp_path, covariate_names=["a", "b"])


class TestReadErrors:
    def write_good(self, tmp_path):
        write_panel(tiny_panel(), tmp_path)
        return tmp_path

    def edit(self, path: Path, old: str, new: str):
        path.write_text(path.read_text().replace(old, new))

    def test_missing_sidecar(self, tmp_path):
        self.write_good(tmp_path)
        (tmp_path / "panel.json").unlink()
        with pytest.raises(PanelFormatError, match="panel.json"):
            read_panel(tmp_path)

    def test_sidecar_bad_json(self, tmp_path):
        self.write_good(tmp_path)
        (tmp_path / "panel.json").write_text("{not json")
        with pytest.raises(PanelFormatError, match="invalid JSON"):
            read_panel(tmp_path)

    def test_sidecar_missing_field(self, tmp_path):
        self.write_good(tmp_path)
        meta = json.loads((tmp_path / "panel.json").read_text())
        del meta["horizon"]
        (tmp_path / "panel.json").write_text(json.dumps(meta))
        with pytest.raises(PanelFormatError, match="horizon"):
            read_panel(tmp_path)

    def test_missing_events_file(self, tmp_path):
        self.write_good(tmp_path)
        (tmp_path / "events.csv").unlink()
        with pytest.raises(PanelFormatError, match="events.csv"):
            read_panel(tmp_path)

    def test_bad_event_time_reports_line(self, tmp_path):
        self.write_good(tmp_path)
        self.edit(tmp_path / "events.csv", "1.5", "soon")
        with pytest.raises(PanelFormatError, match=r"events\.csv:2: .*not a number"):
            read_panel(tmp_path)

    def test_event_beyond_horizon_reports_line(self, tmp_path):
        self.write_good(tmp_path)
        self.edit(tmp_path / "events.csv", "6.25", "60.25")
        with pytest.raises(PanelFormatError, match=r"events\.csv:\d+: .*outside"):
            read_panel(tmp_path)

    def test_reversed_edge_interval_reports_line(self, tmp_path):
        self.write_good(tmp_path)
        self.edit(tmp_path / "edges.csv", "0.0,8.0", "8.0,0.0")
        with pytest.raises(PanelFormatError, match=r"edges\.csv:2: bad on-interval"):
            read_panel(tmp_path)

    def test_ragged_row_reports_line(self, tmp_path):
        self.write_good(tmp_path)
        path = tmp_path / "events.csv"
        path.write_text(path.read_text() + "1.0,0\n")
        with pytest.raises(PanelFormatError, match=r"events\.csv:\d+: expected 3"):
            read_panel(tmp_path)

    def test_covariate_width_reports_line(self, tmp_path):
        self.write_good(tmp_path)
        path = tmp_path / "pair_covariates.csv"
        path.write_text(path.read_text() + "0,1,9.0,1.0,2.0\n")
        with pytest.raises(PanelFormatError, match=r"pair_covariates\.csv:\d+"):
            read_panel(tmp_path)

    def test_vertex_out_of_range(self, tmp_path):
        self.write_good(tmp_path)
        self.edit(tmp_path / "events.csv", "1.5,0,1", "1.5,0,9")
        with pytest.raises(PanelFormatError, match=r"\(0, 9\) outside vertex range"):
            read_panel(tmp_path)

    def test_infinite_value_rejected(self, tmp_path):
        self.write_good(tmp_path)
        self.edit(tmp_path / "events.csv", "1.5", "inf")
        with pytest.raises(PanelFormatError, match="not finite"):
            read_panel(tmp_path)

    def test_ragged_system_rows(self, tmp_path):
        self.write_good(tmp_path)
        (tmp_path / "system_covariates.csv").write_text(
            "t,z1,z2\n0.0,1.0,2.0\n5.0,1.0\n"
        )
        with pytest.raises(PanelFormatError, match=r"system_covariates\.csv:3"):
            read_panel(tmp_path)

    def test_empty_events_file(self, tmp_path):
        self.write_good(tmp_path)
        (tmp_path / "events.csv").write_text("")
        with pytest.raises(PanelFormatError, match="empty file"):
            read_panel(tmp_path)

    def test_overlapping_edge_intervals(self, tmp_path):
        self.write_good(tmp_path)
        path = tmp_path / "edges.csv"
        path.write_text(path.read_text() + "0,1,1.0,9.0\n")
        with pytest.raises(PanelFormatError, match=r"edges\.csv: pair \(0, 1\)"):
            read_panel(tmp_path)
