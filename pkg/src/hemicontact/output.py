"""Result writers: nodal snapshots, time series, iteration log and provenance.

Every writer formats floats with ``%.17g`` and emits no timestamps, so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from .coupling import FixedPointResult, SmallnessReport
from .materials import HypothesisReport, tensor_residual
from .solvers import Trajectory

SNAPSHOT_COLUMNS = ("u_x", "u_y", "v_x", "v_y", "theta")
TIMESERIES_COLUMNS = ("t", "energy", "contact_dissipation", "thermal_energy", "coupling_iterations")


def _g(x: float) -> str:
    return format(float(x), ".17g")


def format_snapshot(mesh, mechanical: Trajectory, thermal: Trajectory, step: int, units: dict | None = None) -> str:
    n = mechanical.grid.n_steps
    if not 0 <= step <= n:
        raise IndexError(f"step {step} out of range [0, {n}]")
    u = mechanical.u[step].reshape(-1, 2)
    v = mechanical.v[step].reshape(-1, 2)
    th = thermal.theta[step]
    lines = [
        "# hemicontact snapshot",
        f"# step {step}",
        f"# t {_g(mechanical.grid.times[step])}",
        "# columns node i x y " + " ".join(SNAPSHOT_COLUMNS),
    ]
    if units:
        lines.append("# units " + " ".join(f"{k}={units[k]}" for k in sorted(units)))
    for i, (x, y) in enumerate(mesh.vertices):
        vals = (u[i, 0], u[i, 1], v[i, 0], v[i, 1], th[i])
        lines.append(f"node {i} {_g(x)} {_g(y)} " + " ".join(_g(z) for z in vals))
    return "\n".join(lines) + "\n"


def write_snapshot(mesh, mechanical: Trajectory, thermal: Trajectory, step: int, path, units: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(format_snapshot(mesh, mechanical, thermal, step, units))
    return path


@dataclass
class Snapshot:
    step: int
    t: float
    coordinates: np.ndarray
    values: np.ndarray

    def column(self, name: str) -> np.ndarray:
        return self.values[:, SNAPSHOT_COLUMNS.index(name)]


def parse_snapshot(text: str) -> Snapshot:
    step, t = -1, float("nan")
    coords, vals = [], []
    for line in text.splitlines():
        if line.startswith("# step "):
            step = int(line.split()[2])
        elif line.startswith("# t "):
            t = float(line.split()[2])
        elif line.startswith("node "):
            parts = line.split()
            if int(parts[1]) != len(coords):
                raise ValueError(f"node rows out of order at node {parts[1]}")
            coords.append([float(parts[2]), float(parts[3])])
            vals.append([float(z) for z in parts[4:]])
    return Snapshot(step, t, np.array(coords), np.array(vals))


def read_snapshot(path) -> Snapshot:
    return parse_snapshot(Path(path).read_text())


# time series


def timeseries(scenario, mechanical: Trajectory, thermal: Trajectory, iterations: int) -> np.ndarray:
    """Rows ``(t, kinetic + elastic energy, contact power, thermal energy, coupling iterations)``.

    The elastic part is ``<B(t, u), u> / 2``, the stored energy for linear elasticity.
    """
    disc = scenario.disc
    model = scenario.model
    cn = disc.contact
    idx = disc.contact_mech
    rows = []
    for n, t in enumerate(scenario.grid.times):
        u, v, th = mechanical.u[n], mechanical.v[n], thermal.theta[n]
        energy = 0.5 * v @ (disc.mass @ v) + 0.5 * u @ tensor_residual(model.elasticity, t, disc, u)
        power = 0.0
        if idx.size:
            W = v.reshape(-1, 2)[cn.nodes[idx]]
            vn = np.einsum("ki,ki->k", W, cn.normals[idx])
            vt = np.einsum("ki,ki->k", W, cn.tangents[idx])
            sn = np.asarray(scenario.normal_law.selection(vn), dtype=float)
            st = np.asarray(scenario.tangential_law.selection(vt), dtype=float)
            power = float(np.sum(cn.weights[idx] * (sn * vn + st * vt)))
        rows.append((t, energy, power, 0.5 * th @ (disc.mass_scalar @ th), iterations))
    return np.array(rows, dtype=float)


def format_timeseries(rows: np.ndarray) -> str:
    lines = [",".join(TIMESERIES_COLUMNS)]
    for r in rows:
        lines.append(",".join([_g(r[0]), _g(r[1]), _g(r[2]), _g(r[3]), str(int(r[4]))]))
    return "\n".join(lines) + "\n"


# provenance and run artifacts


def provenance(scenario, seed: int, extra: dict | None = None) -> dict:
    from . import __version__

    info = {
        "scenario": scenario.name,
        "config_hash": scenario.config_hash,
        "seed": int(seed),
        "units": dict(scenario.units),
        "mesh": {"vertices": scenario.mesh.n_vertices, "triangles": scenario.mesh.n_triangles},
        "time": {"T": scenario.grid.T, "n_steps": scenario.grid.n_steps},
        "versions": {
            "hemicontact": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    if extra:
        info.update(extra)
    return info


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
    return path


@dataclass
class RunArtifacts:
    directory: Path
    snapshots: list[Path]
    timeseries: Path
    iterations: Path
    smallness: Path
    hypotheses: Path
    provenance: Path

    @property
    def files(self) -> list[Path]:
        return [*self.snapshots, self.timeseries, self.iterations, self.smallness, self.hypotheses, self.provenance]


def write_run(
    scenario,
    result: FixedPointResult,
    smallness: SmallnessReport,
    hypotheses: HypothesisReport,
    out_dir,
    seed: int = 0,
    extra: dict | None = None,
) -> RunArtifacts:
    """Write trajectories, time series, iteration log, both reports and provenance to ``out_dir``."""
    out = Path(out_dir)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    units = scenario.units
    snaps = [
        write_snapshot(scenario.mesh, result.mechanical, result.thermal, n, snap_dir / f"step_{n:04d}.txt", units)
        for n in range(scenario.grid.n_steps + 1)
    ]
    ts = out / "timeseries.csv"
    ts.write_text(format_timeseries(timeseries(scenario, result.mechanical, result.thermal, result.report.iterations)))
    it = out / "iterations.csv"
    it.write_text(result.report.to_csv())
    unit_label = " ".join(f"{k}={units[k]}" for k in sorted(units))
    sm = out / "smallness.txt"
    sm.write_text(smallness.format(unit_label))
    hy = out / "hypotheses.txt"
    hy.write_text(hypotheses.format(unit_label))
    extra = dict(extra or {})
    extra.update({"rho": result.report.rho, "coupling_iterations": result.report.iterations, "converged": result.report.converged})
    pv = write_json(provenance(scenario, seed, extra), out / "provenance.json")
    return RunArtifacts(out, snaps, ts, it, sm, hy, pv)
