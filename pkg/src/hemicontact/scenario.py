"""Scenario description and the ``.scn`` file format.

A scenario file is INI-style text::

    [scenario]
    name = clamped-block

    [mesh]
    file = block.msh           # or: rectangle = nx ny [lx ly] with left/right/bottom/top tags

    [time]
    T = 1.0
    n_steps = 40

    [material]
    viscosity = 1.0 0.5        # mu lambda
    elasticity = 2.0 1.0
    memory = 0.2 0.1 0.5       # mu lambda tau; further terms separated by ';'
    thermal_expansion = 0.1
    conductivity = 1.0         # k [kappa]
    heat_source = 0.05
    tangential_heating = 0.2

    [laws.normal]
    family = damped_response
    stiffness = 0.5

    [loads.f1]
    x = 0.0
    y = -0.1 * x
    times = 0 1
    values = 0 1

Spatial fields are expressions in ``x`` and ``y``; time modulations are
piecewise linear (``times``/``values``). Errors carry the key path.
"""

from __future__ import annotations

import ast
import configparser
import dataclasses
import hashlib
import math
import weakref
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from . import nonsmooth as ns
from .fem import Discretization, TraceConstants, estimate_trace_constants
from .materials import (
    BoundedGradientConductivity,
    LinearConductivity,
    LinearHeatSource,
    LinearIsotropicLaw,
    LinearTangentialHeating,
    LinearThermalExpansion,
    MaterialModel,
    MemoryKernel,
    Modulation,
)
from .mesh import Mesh, MeshError, Tag, load_mesh, parse_mesh, rectangle_mesh
from .nonsmooth import BoundaryLaw, LawError, LawKind
from .solvers import SolverConfig, TimeGrid

DATA_DIR = Path(__file__).parent / "data"

_DISC_CACHE: "weakref.WeakKeyDictionary[Mesh, Discretization]" = weakref.WeakKeyDictionary()
_TRACE_CACHE: "weakref.WeakKeyDictionary[Mesh, TraceConstants]" = weakref.WeakKeyDictionary()


class ScenarioError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def discretization(mesh: Mesh) -> Discretization:
    if mesh not in _DISC_CACHE:
        _DISC_CACHE[mesh] = Discretization(mesh)
    return _DISC_CACHE[mesh]


def trace_constants(mesh: Mesh) -> TraceConstants:
    if mesh not in _TRACE_CACHE:
        _TRACE_CACHE[mesh] = estimate_trace_constants(mesh)
    return _TRACE_CACHE[mesh]


@dataclass(frozen=True, eq=False)
class LoadTerm:
    """``modulation(t) * values``: a nodal field with a scalar time factor.

    With ``dual=True`` the values are already paired with the basis functions
    (for loads assembled by the caller, e.g. by exact edge quadrature).
    """

    values: np.ndarray
    modulation: Callable[[float], float] = Modulation()
    dual: bool = False


def _paired(mass, term: LoadTerm) -> np.ndarray:
    vals = np.asarray(term.values, dtype=float).reshape(-1)
    return vals.copy() if term.dual else mass @ vals


def zero_law(kind: LawKind | str) -> BoundaryLaw:
    return ns.linear_law(0.0, 0.0, kind=kind)


@dataclass(eq=False)
class Scenario:
    mesh: Mesh
    model: MaterialModel
    grid: TimeGrid
    normal_law: BoundaryLaw | None = None
    tangential_law: BoundaryLaw | None = None
    thermal_law: BoundaryLaw | None = None
    f0: tuple[LoadTerm, ...] = ()
    f1: tuple[LoadTerm, ...] = ()
    g: tuple[LoadTerm, ...] = ()
    u0: np.ndarray | None = None
    v0: np.ndarray | None = None
    theta0: np.ndarray | None = None
    config: SolverConfig = field(default_factory=SolverConfig)
    name: str = "scenario"
    units: dict = field(default_factory=dict)
    source: str = ""

    def __post_init__(self):
        n = self.mesh.n_vertices
        self.normal_law = zero_law(LawKind.NORMAL) if self.normal_law is None else self.normal_law
        self.tangential_law = zero_law(LawKind.TANGENTIAL) if self.tangential_law is None else self.tangential_law
        self.thermal_law = zero_law(LawKind.THERMAL) if self.thermal_law is None else self.thermal_law
        for key, law, kind in (
            ("laws.normal", self.normal_law, LawKind.NORMAL),
            ("laws.tangential", self.tangential_law, LawKind.TANGENTIAL),
            ("laws.thermal", self.thermal_law, LawKind.THERMAL),
        ):
            if law.kind is not kind:
                raise ScenarioError(f"law kind mismatch: expected {kind.value}, got {law.kind.value}", key)
            try:
                law.validate()
            except LawError as exc:
                raise ScenarioError(str(exc), key) from exc
        clamped = self.mesh.vertices_on(Tag.DIRICHLET)
        for key in ("u0", "v0"):
            val = getattr(self, key)
            arr = np.zeros(2 * n) if val is None else np.array(val, dtype=float).reshape(-1)
            if arr.shape[0] != 2 * n:
                raise ScenarioError(f"expected {2 * n} values, got {arr.shape[0]}", f"initial.{key}")
            dofs = np.concatenate([2 * clamped, 2 * clamped + 1])
            if np.max(np.abs(arr[dofs]), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(arr), initial=0.0)):
                raise ScenarioError("initial field must vanish on the Dirichlet boundary", f"initial.{key}")
            arr[dofs] = 0.0
            setattr(self, key, arr)
        th = np.zeros(n) if self.theta0 is None else np.array(self.theta0, dtype=float).reshape(-1)
        if th.shape[0] != n:
            raise ScenarioError(f"expected {n} values, got {th.shape[0]}", "initial.theta0")
        self.theta0 = th
        for key, terms, comps in (("loads.f0", self.f0, 2), ("loads.f1", self.f1, 2), ("loads.g", self.g, 1)):
            for term in terms:
                vals = np.asarray(term.values, dtype=float)
                if vals.size != comps * n:
                    raise ScenarioError(f"expected {comps * n} nodal values, got {vals.size}", key)
        if any(np.any(t.values) for t in self.f1) and not self.mesh.edges_with(Tag.NEUMANN).size:
            raise ScenarioError("traction given but the mesh has no Neumann edges", "loads.f1")

    @property
    def disc(self) -> Discretization:
        return discretization(self.mesh)

    @property
    def trace_constants(self) -> TraceConstants:
        return trace_constants(self.mesh)

    @cached_property
    def _mechanical_duals(self) -> list[tuple[Callable, np.ndarray]]:
        d = self.disc
        out = [(t.modulation, _paired(d.mass, t)) for t in self.f0]
        out += [(t.modulation, _paired(d.neumann_mass, t)) for t in self.f1]
        return out

    @cached_property
    def _thermal_duals(self) -> list[tuple[Callable, np.ndarray]]:
        d = self.disc
        return [(t.modulation, _paired(d.mass_scalar, t)) for t in self.g]

    def mechanical_load(self, t: float) -> np.ndarray:
        """Combined load: body force plus Neumann traction, paired with every vector basis function."""
        out = np.zeros(self.disc.n_u)
        for mod, vec in self._mechanical_duals:
            out += float(mod(t)) * vec
        return out

    def thermal_load(self, t: float) -> np.ndarray:
        out = np.zeros(self.disc.n_vertices)
        for mod, vec in self._thermal_duals:
            out += float(mod(t)) * vec
        return out

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_grid(self, T: float | None = None, n_steps: int | None = None) -> "Scenario":
        return self.replace(grid=TimeGrid(self.grid.T if T is None else T, self.grid.n_steps if n_steps is None else n_steps))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.source.encode()).hexdigest() if self.source else ""


# expressions

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
    "tanh": np.tanh, "sinh": np.sinh, "cosh": np.cosh, "minimum": np.minimum, "maximum": np.maximum,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call, ast.Load,
          ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod)


def evaluate_expression(expr: str, x: np.ndarray, y: np.ndarray, key: str = "") -> np.ndarray:
    """Evaluate an arithmetic expression in ``x`` and ``y`` at the given points."""
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ScenarioError(f"cannot parse expression {expr!r}", key) from exc
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ScenarioError(f"unsupported syntax in {expr!r}", key)
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id not in ("x", "y"):
            raise ScenarioError(f"unknown name {node.id!r} in {expr!r}", key)
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ScenarioError(f"unsupported function call in {expr!r}", key)
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ScenarioError(f"non-numeric constant in {expr!r}", key)
    env = {"__builtins__": {}, "x": x, "y": y, **_FUNCS, **_CONSTS}
    with np.errstate(all="ignore"):
        val = eval(compile(tree, "<expr>", "eval"), env)  # noqa: S307 - AST whitelisted above
    out = np.broadcast_to(np.asarray(val, dtype=float), x.shape).copy()
    if not np.all(np.isfinite(out)):
        raise ScenarioError(f"expression {expr!r} is not finite on the mesh", key)
    return out


# parsing helpers


class _Section:
    def __init__(self, cp: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(cp[name]) if cp.has_section(name) else {}
        self.used: set[str] = set()

    def __contains__(self, key: str) -> bool:
        return key.lower() in self.data

    def key(self, k: str) -> str:
        return f"{self.name}.{k}"

    def get(self, k: str, default=None) -> str | None:
        k = k.lower()
        if k in self.data:
            self.used.add(k)
            return self.data[k]
        return default

    def number(self, k: str, default: float | None = None, required: bool = False) -> float | None:
        raw = self.get(k)
        if raw is None:
            if required:
                raise ScenarioError("missing required key", self.key(k))
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ScenarioError(f"expected a number, got {raw!r}", self.key(k)) from exc

    def numbers(self, k: str, default=None, count: int | None = None) -> list[float] | None:
        raw = self.get(k)
        if raw is None:
            return default
        try:
            vals = [float(s) for s in raw.replace(",", " ").split()]
        except ValueError as exc:
            raise ScenarioError(f"expected numbers, got {raw!r}", self.key(k)) from exc
        if count is not None and len(vals) not in (count if isinstance(count, tuple) else (count,)):
            raise ScenarioError(f"expected {count} numbers, got {len(vals)}", self.key(k))
        return vals

    def integer(self, k: str, default: int | None = None, required: bool = False) -> int | None:
        v = self.number(k, None if default is None else float(default), required)
        if v is None:
            return None
        if v != int(v):
            raise ScenarioError(f"expected an integer, got {v}", self.key(k))
        return int(v)

    def boolean(self, k: str, default: bool = False) -> bool:
        raw = self.get(k)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ScenarioError(f"expected a boolean, got {raw!r}", self.key(k))

    def check_unused(self) -> None:
        extra = sorted(set(self.data) - self.used)
        if extra:
            raise ScenarioError(f"unknown key(s): {', '.join(extra)}", self.name)


def _modulation(sec: _Section, prefix: str = "") -> Modulation:
    times = sec.numbers(prefix + "times")
    values = sec.numbers(prefix + "values")
    if times is None and values is None:
        return Modulation()
    if times is None or values is None or len(times) != len(values):
        raise ScenarioError("times and values must both be given with equal length", sec.key(prefix + "times"))
    try:
        return Modulation(tuple(times), tuple(values))
    except ValueError as exc:
        raise ScenarioError(str(exc), sec.key(prefix + "times")) from exc


def _pairs(sec: _Section, k: str) -> Modulation:
    raw = sec.get(k)
    if raw is None:
        return Modulation()
    try:
        items = [p.split(":") for p in raw.replace(",", " ").split()]
        return Modulation(tuple(float(a) for a, _ in items), tuple(float(b) for _, b in items))
    except ValueError as exc:
        raise ScenarioError(f"expected t:value pairs, got {raw!r}", sec.key(k)) from exc


def _resolve(path: str, base: Path | None, sub: str) -> Path:
    p = Path(path)
    candidates = [p] if p.is_absolute() else ([base / p] if base else []) + [DATA_DIR / sub / p, Path.cwd() / p]
    for c in candidates:
        if c.is_file():
            return c
    raise FileNotFoundError(path)


def _parse_mesh(sec: _Section, base: Path | None) -> tuple[Mesh, str]:
    fix = sec.boolean("fix_orientation", False)
    if "file" in sec:
        raw = sec.get("file")
        try:
            path = _resolve(raw, base, "meshes")
        except FileNotFoundError as exc:
            raise ScenarioError(f"mesh file {raw!r} not found", sec.key("file")) from exc
        text = path.read_text()
        try:
            mesh = parse_mesh(text, fix_orientation=fix, source=str(path.name))
        except MeshError as exc:
            raise ScenarioError(str(exc), sec.key("file")) from exc
    elif "rectangle" in sec:
        vals = sec.numbers("rectangle", count=(2, 4))
        nx, ny = int(vals[0]), int(vals[1])
        lx, ly = (vals[2], vals[3]) if len(vals) == 4 else (1.0, 1.0)
        tags = {side: sec.get(side, default) for side, default in (("left", "D"), ("right", "N"), ("bottom", "C"), ("top", "N"))}
        try:
            mesh = rectangle_mesh(nx, ny, lx, ly, **tags)
        except (MeshError, ValueError) as exc:
            raise ScenarioError(str(exc), sec.key("rectangle")) from exc
        text = ""
    else:
        raise ScenarioError("either 'file' or 'rectangle' is required", sec.name)
    levels = sec.integer("refine", 0)
    from .mesh import refine

    for _ in range(levels):
        mesh = refine(mesh)
    sec.check_unused()
    return mesh, text


def _tensor_law(sec: _Section, k: str, default=(0.0, 0.0)) -> LinearIsotropicLaw:
    vals = sec.numbers(k, list(default), count=2)
    return LinearIsotropicLaw(vals[0], vals[1], _pairs(sec, k + "_modulation"))


def _parse_material(sec: _Section) -> MaterialModel:
    if "viscosity" not in sec:
        raise ScenarioError("missing required key", sec.key("viscosity"))
    visc = _tensor_law(sec, "viscosity")
    elas = _tensor_law(sec, "elasticity")
    terms = []
    raw = sec.get("memory")
    if raw:
        for part in raw.split(";"):
            try:
                vals = [float(s) for s in part.split()]
            except ValueError as exc:
                raise ScenarioError(f"expected 'mu lambda tau' terms, got {part!r}", sec.key("memory")) from exc
            if len(vals) != 3:
                raise ScenarioError(f"expected 'mu lambda tau' terms, got {part!r}", sec.key("memory"))
            terms.append(tuple(vals))
    try:
        memory = MemoryKernel(tuple(terms))
    except ValueError as exc:
        raise ScenarioError(str(exc), sec.key("memory")) from exc
    expansion = LinearThermalExpansion(sec.number("thermal_expansion", 0.0), _pairs(sec, "thermal_expansion_modulation"))
    kv = sec.numbers("conductivity", [1.0], count=(1, 2))
    kmod = _pairs(sec, "conductivity_modulation")
    if len(kv) == 2 and kv[1] != 0.0:
        conductivity = BoundedGradientConductivity(kv[0], kv[1], kmod)
    else:
        conductivity = LinearConductivity(kv[0], kmod)
    source = LinearHeatSource(sec.number("heat_source", 0.0), _pairs(sec, "heat_source_modulation"))
    heating = LinearTangentialHeating(sec.number("tangential_heating", 0.0), _pairs(sec, "tangential_heating_modulation"))
    if heating.lam < 0:
        raise ScenarioError("tangential heating rate must be nonnegative", sec.key("tangential_heating"))
    sec.check_unused()
    return MaterialModel(visc, elas, memory, expansion, conductivity, source, heating)


_FAMILY_KIND = {"slip_weakening": LawKind.TANGENTIAL, "damped_response": LawKind.NORMAL, "robin": LawKind.THERMAL}


def law_from_section(sec: _Section, kind: LawKind, base: Path | None = None) -> BoundaryLaw:
    """Build a law from a ``[laws.*]`` (or ``[law]``) section."""
    if "file" in sec:
        raw = sec.get("file")
        try:
            path = _resolve(raw, base, "laws")
        except FileNotFoundError as exc:
            raise ScenarioError(f"law file {raw!r} not found", sec.key("file")) from exc
        law = load_law(path, kind)
        sec.check_unused()
        return law
    family = (sec.get("family") or ("piecewise" if "breakpoints" in sec or "piece0" in sec else "linear")).strip()
    declared_kind = sec.get("kind")
    if declared_kind is not None:
        try:
            dk = LawKind(declared_kind.strip())
        except ValueError as exc:
            raise ScenarioError(f"unknown law kind {declared_kind!r}", sec.key("kind")) from exc
        if dk is not kind:
            raise ScenarioError(f"law kind mismatch: section expects {kind.value}, got {dk.value}", sec.key("kind"))
    fam_kind = _FAMILY_KIND.get(family)
    if fam_kind is not None and fam_kind is not kind:
        raise ScenarioError(f"law kind mismatch: family {family!r} is a {fam_kind.value} law", sec.key("family"))
    common = {}
    for k in ("c0", "c1", "m", "epsilon"):
        v = sec.number(k)
        if v is not None:
            common[k] = v
    reg = sec.get("regular")
    if reg is not None:
        common["regular"] = {"j": "j", "-j": "-j", "none": None}.get(reg.strip(), reg.strip())
    common["name"] = sec.get("name", sec.name)
    try:
        if family == "linear":
            law = ns.linear_law(sec.number("slope", 0.0), sec.number("offset", 0.0), kind=kind, **common)
        elif family == "sign":
            law = ns.sign_law(sec.number("amplitude", 1.0), kind=kind, **common)
        elif family == "slip_weakening":
            law = ns.slip_weakening_law(
                sec.number("static", required=True), sec.number("kinetic", required=True), sec.number("slip_scale", required=True), **common
            )
        elif family == "damped_response":
            law = ns.damped_response_law(sec.number("stiffness", required=True), **common)
        elif family == "robin":
            law = ns.robin_law(sec.number("coefficient", required=True), sec.number("reference", 0.0), **common)
        elif family == "piecewise":
            bps = sec.numbers("breakpoints", [])
            pieces = []
            for i in range(len(bps) + 1):
                p = sec.numbers(f"piece{i}")
                if p is None:
                    raise ScenarioError("missing polynomial piece", sec.key(f"piece{i}"))
                pieces.append(tuple(p))
            pv = []
            raw = sec.get("point_values")
            if raw:
                try:
                    pv = [tuple(float(a) for a in item.split(":")) for item in raw.replace(",", " ").split()]
                except ValueError as exc:
                    raise ScenarioError(f"expected x:value pairs, got {raw!r}", sec.key("point_values")) from exc
            law = ns.piecewise_law(bps, pieces, kind=kind, point_values=tuple(pv), **common)
        else:
            raise ScenarioError(f"unknown law family {family!r}", sec.key("family"))
    except LawError as exc:
        raise ScenarioError(str(exc), sec.name) from exc
    sec.check_unused()
    return law


def load_law(path: str | Path, kind: LawKind | str | None = None) -> BoundaryLaw:
    """Read a law file (a single ``[law]`` section in scenario syntax)."""
    path = Path(path)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ScenarioError(str(exc), str(path)) from exc
    sec = _Section(cp, "law")
    if not sec.data:
        raise ScenarioError("missing [law] section", str(path))
    if kind is None:
        k = sec.data.get("kind") or _FAMILY_KIND.get(sec.data.get("family", ""), LawKind.NORMAL).value
        kind = LawKind(k)
    return law_from_section(sec, LawKind(kind), path.parent)


def _nodal_vector(sec: _Section, mesh: Mesh, kx: str, ky: str) -> np.ndarray:
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    vx = evaluate_expression(sec.get(kx, "0"), x, y, sec.key(kx))
    vy = evaluate_expression(sec.get(ky, "0"), x, y, sec.key(ky))
    return np.column_stack([vx, vy]).reshape(-1)


def _parse_loads(cp: configparser.ConfigParser, mesh: Mesh) -> dict[str, tuple[LoadTerm, ...]]:
    out: dict[str, tuple[LoadTerm, ...]] = {"f0": (), "f1": (), "g": ()}
    known = {"loads.f0", "loads.f1", "loads.g"}
    for name in cp.sections():
        if name.startswith("loads.") and name not in known:
            raise ScenarioError("unknown load section", name)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    for key in ("f0", "f1"):
        sec = _Section(cp, f"loads.{key}")
        if sec.data:
            vals = _nodal_vector(sec, mesh, "x", "y")
            out[key] = (LoadTerm(vals, _modulation(sec)),)
            sec.check_unused()
    sec = _Section(cp, "loads.g")
    if sec.data:
        vals = evaluate_expression(sec.get("value", "0"), x, y, sec.key("value"))
        out["g"] = (LoadTerm(vals, _modulation(sec)),)
        sec.check_unused()
    return out


def _parse_solver(sec: _Section) -> SolverConfig:
    kw = {}
    for f in dataclasses.fields(SolverConfig):
        if f.name not in sec:
            continue
        if f.type in ("bool",) or isinstance(f.default, bool):
            kw[f.name] = sec.boolean(f.name)
        elif isinstance(f.default, int) and not isinstance(f.default, bool):
            kw[f.name] = sec.integer(f.name)
        else:
            kw[f.name] = sec.number(f.name)
    sec.check_unused()
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), sec.name) from exc


_SECTIONS = {"scenario", "units", "mesh", "time", "material", "laws.normal", "laws.tangential", "laws.thermal",
             "loads.f0", "loads.f1", "loads.g", "initial", "solver"}


def parse_scenario_text(text: str, base: Path | None = None, source: str = "<scenario>") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ScenarioError(str(exc).replace("\n", " "), source) from exc
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ScenarioError("unknown section", name)
    head = _Section(cp, "scenario")
    name = head.get("name", Path(source).stem)
    head.get("description")
    head.check_unused()
    units = dict(cp["units"]) if cp.has_section("units") else {}
    mesh, mesh_text = _parse_mesh(_Section(cp, "mesh"), base)
    tsec = _Section(cp, "time")
    try:
        grid = TimeGrid(tsec.number("T", required=True), tsec.integer("n_steps", required=True))
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc), "time") from exc
    tsec.check_unused()
    msec = _Section(cp, "material")
    if not msec.data:
        raise ScenarioError("missing section", "material")
    model = _parse_material(msec)
    laws = {}
    for kind in LawKind:
        sec = _Section(cp, f"laws.{kind.value}")
        laws[kind] = law_from_section(sec, kind, base) if sec.data else None
    loads = _parse_loads(cp, mesh)
    isec = _Section(cp, "initial")
    u0 = _nodal_vector(isec, mesh, "u0_x", "u0_y")
    v0 = _nodal_vector(isec, mesh, "v0_x", "v0_y")
    theta0 = evaluate_expression(isec.get("theta0", "0"), mesh.vertices[:, 0], mesh.vertices[:, 1], isec.key("theta0"))
    isec.check_unused()
    config = _parse_solver(_Section(cp, "solver"))
    digest_src = text + "\n#mesh\n" + mesh_text
    return Scenario(
        mesh=mesh, model=model, grid=grid,
        normal_law=laws[LawKind.NORMAL], tangential_law=laws[LawKind.TANGENTIAL], thermal_law=laws[LawKind.THERMAL],
        f0=loads["f0"], f1=loads["f1"], g=loads["g"], u0=u0, v0=v0, theta0=theta0,
        config=config, name=name, units=units, source=digest_src,
    )


def parse_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file; relative mesh/law paths resolve next to it, then in the shipped data."""
    path = Path(path)
    if not path.is_file():
        try:
            path = _resolve(str(path), None, "scenarios")
        except FileNotFoundError as exc:
            raise ScenarioError("scenario file not found", str(path)) from exc
    return parse_scenario_text(path.read_text(), base=path.parent, source=str(path))


def shipped_scenario(name: str) -> Path:
    return DATA_DIR / "scenarios" / name


def shipped_mesh(name: str) -> Path:
    return DATA_DIR / "meshes" / name


def shipped_law(name: str) -> Path:
    return DATA_DIR / "laws" / name
