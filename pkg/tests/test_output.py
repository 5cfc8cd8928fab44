import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from hemicontact.coupling import check_smallness, fixed_point_solve
from hemicontact.materials import check_hypotheses
from hemicontact.output import (
    SNAPSHOT_COLUMNS,
    TIMESERIES_COLUMNS,
    format_snapshot,
    parse_snapshot,
    read_snapshot,
    timeseries,
    write_run,
    write_snapshot,
)

GOLDEN = Path(__file__).parent / "golden"


def test_zero_field_snapshot(rest):
    res = fixed_point_solve(rest)
    text = format_snapshot(rest.mesh, res.mechanical, res.thermal, 2, rest.units)
    snap = parse_snapshot(text)
    assert snap.step == 2 and snap.t == 0.5
    assert snap.values.shape == (rest.mesh.n_vertices, len(SNAPSHOT_COLUMNS))
    assert np.all(snap.values == 0.0)
    rows = [line for line in text.splitlines() if line.startswith("node ")]
    assert rows[1] == "node 1 1 0 0 0 0 0 0"
    assert "# units length=m stress=Pa temperature=K time=s" in text


def test_snapshot_round_trip(benchmark, benchmark_result, tmp_path):
    res = benchmark_result
    p = write_snapshot(benchmark.mesh, res.mechanical, res.thermal, 7, tmp_path / "s.txt")
    snap = read_snapshot(p)
    assert np.array_equal(snap.coordinates, benchmark.mesh.vertices)
    assert np.array_equal(snap.column("u_x"), res.mechanical.u[7][0::2])
    assert np.array_equal(snap.column("v_y"), res.mechanical.v[7][1::2])
    assert np.array_equal(snap.column("theta"), res.thermal.theta[7])
    assert snap.t == benchmark.grid.times[7]


def test_snapshot_step_checked(rest):
    res = fixed_point_solve(rest)
    with pytest.raises(IndexError):
        format_snapshot(rest.mesh, res.mechanical, res.thermal, rest.grid.n_steps + 1)


def test_benchmark_step_10_golden_hash(benchmark, benchmark_result):
    res = benchmark_result
    text = format_snapshot(benchmark.mesh, res.mechanical, res.thermal, 10, benchmark.units)
    expected = (GOLDEN / "benchmark_step_0010.sha256").read_text().split()[0]
    assert hashlib.sha256(text.encode()).hexdigest() == expected


def test_timeseries_columns(benchmark, benchmark_result):
    rows = timeseries(benchmark, benchmark_result.mechanical, benchmark_result.thermal, benchmark_result.report.iterations)
    assert rows.shape == (benchmark.grid.n_steps + 1, len(TIMESERIES_COLUMNS))
    assert np.all(rows[0, 1:4] == 0.0)
    assert np.all(rows[1:, 1] > 0) and np.all(rows[:, 3] >= 0)
    assert np.all(rows[:, 4] == benchmark_result.report.iterations)


def test_run_artifacts_complete_and_deterministic(benchmark, benchmark_result, tmp_path):
    small = check_smallness(benchmark)
    hyp = check_hypotheses(benchmark.model, 1000)
    a = write_run(benchmark, benchmark_result, small, hyp, tmp_path / "a", seed=3)
    b = write_run(benchmark, benchmark_result, small, hyp, tmp_path / "b", seed=3)
    assert len(a.snapshots) == benchmark.grid.n_steps + 1
    for fa, fb in zip(a.files, b.files):
        assert fa.is_file() and fa.read_bytes() == fb.read_bytes()
    prov = json.loads(a.provenance.read_text())
    assert prov["config_hash"] == benchmark.config_hash and prov["seed"] == 3
    assert prov["coupling_iterations"] == benchmark_result.report.iterations
    assert set(prov["versions"]) == {"hemicontact", "numpy", "scipy", "python"}
    assert "(length=m" in a.smallness.read_text().splitlines()[0]
