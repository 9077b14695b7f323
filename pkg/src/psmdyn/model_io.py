"""
Model (``.psm``) and trajectory (CSV) files.

A ``.psm`` file is a YAML document; the schema is described in
``data/psm_schema.md``. Loading reports every problem with its source line.
Trajectories are CSV files with a ``# channels:`` directive naming the
per-actuator columns and a ``# rate:`` directive giving the sample rate.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml
from scipy.spatial.transform import Rotation

from .assembly import SerialModuleParams
from .closed_loop import ParallelModuleParams, solve_closure_from_x
from .errors import ConfigurationError, ParseError, RangeError, ValidationError
from .solver import ManipulatorModel
from .spatial import SpatialInertia, Transform, orthonormalize

FORMAT = "psm/1"
_ROT_TOL = 1e-6
_PSD_TOL = 1e-9

PARALLEL_BODIES = ("B0", "B1", "B3", "B4", "E")
SERIAL_BODIES = ("Bc", "B4")

_PARALLEL_KEYS = {"kind", "name", "mount", "L", "L1", "Lc", "Lc0", "base_offset", "tip", "bodies"}
_SERIAL_KEYS = {"kind", "name", "mount", "screw", "joint_offset", "tip", "limits", "bodies"}
_JOINT_SCREWS = {
    "revolute": [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    "prismatic": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
}


# ---------------------------------------------------------------------------
# YAML with source lines


def _compose(text: str):
    try:
        return yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(str(exc.problem or exc), line=line, column=col) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc)) from None


class _Node:
    """A plain value with the line it came from."""

    __slots__ = ("value", "line")

    def __init__(self, value, line):
        self.value = value
        self.line = line


def _convert(node) -> _Node:
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = k.value if isinstance(k, yaml.ScalarNode) else str(k.value)
            if key in out:
                raise ParseError(f"duplicate key {key!r}", line=k.start_mark.line + 1)
            out[key] = _convert(v)
        return _Node(out, line)
    if isinstance(node, yaml.SequenceNode):
        return _Node([_convert(v) for v in node.value], line)
    ctor = yaml.SafeLoader("")
    try:
        return _Node(ctor.construct_object(node, deep=True), line)
    except yaml.YAMLError as exc:
        raise ParseError(str(exc), line=line) from None


class _Checker:
    """Collects ``(line, path, message)`` issues while reading a document."""

    def __init__(self):
        self.issues = []

    def fail(self, node, path, msg):
        self.issues.append((node.line if isinstance(node, _Node) else node, path, msg))
        return None

    def number(self, node, path):
        v = node.value
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            return self.fail(node, path, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            return self.fail(node, path, "value is not finite")
        return v

    def vector(self, node, path, size):
        v = node.value
        if not isinstance(v, list) or len(v) != size:
            return self.fail(node, path, f"expected a list of {size} numbers")
        out = [self.number(x, f"{path}[{i}]") for i, x in enumerate(v)]
        return None if any(x is None for x in out) else np.array(out)

    def matrix(self, node, path, rows, cols):
        v = node.value
        if not isinstance(v, list) or len(v) != rows:
            return self.fail(node, path, f"expected a {rows}x{cols} nested list")
        out = [self.vector(r, f"{path}[{i}]", cols) for i, r in enumerate(v)]
        return None if any(r is None for r in out) else np.array(out)

    def mapping(self, node, path, allowed=None):
        if not isinstance(node.value, dict):
            return self.fail(node, path, "expected a mapping")
        if allowed is not None:
            for key, val in node.value.items():
                if key not in allowed:
                    self.fail(val, f"{path}.{key}", "unknown key")
        return node.value


def _read_transform(ck: _Checker, node: _Node | None, path: str) -> Transform:
    if node is None:
        return Transform()
    m = ck.mapping(node, path, {"translation", "rpy", "axis_angle", "rotation"})
    if m is None:
        return Transform()
    p = np.zeros(3)
    if "translation" in m:
        v = ck.vector(m["translation"], f"{path}.translation", 3)
        p = v if v is not None else p
    given = [k for k in ("rpy", "axis_angle", "rotation") if k in m]
    if len(given) > 1:
        ck.fail(node, path, f"give only one of rpy, axis_angle, rotation (got {', '.join(given)})")
        return Transform(np.eye(3), p)
    r = np.eye(3)
    if "rpy" in m:
        v = ck.vector(m["rpy"], f"{path}.rpy", 3)
        if v is not None:
            r = Rotation.from_euler("xyz", v).as_matrix()
    elif "axis_angle" in m:
        v = ck.vector(m["axis_angle"], f"{path}.axis_angle", 4)
        if v is not None:
            axis = v[:3]
            na = np.linalg.norm(axis)
            if na == 0.0:
                ck.fail(m["axis_angle"], f"{path}.axis_angle", "axis must be non-zero")
            else:
                r = Rotation.from_rotvec(axis / na * v[3]).as_matrix()
    elif "rotation" in m:
        v = ck.matrix(m["rotation"], f"{path}.rotation", 3, 3)
        if v is not None:
            err = np.max(np.abs(v.T @ v - np.eye(3)))
            if err > _ROT_TOL or np.linalg.det(v) < 0:
                ck.fail(m["rotation"], f"{path}.rotation", f"not a rotation matrix (orthogonality error {err:.2g})")
            else:
                r = v
    return Transform(orthonormalize(r) if "rotation" in m else r, p)


def _read_inertia(ck: _Checker, node: _Node | None, path: str) -> SpatialInertia:
    if node is None:
        return SpatialInertia()
    m = ck.mapping(node, path, {"mass", "com", "inertia"})
    if m is None:
        return SpatialInertia()
    mass = None
    if "mass" in m:
        v = ck.number(m["mass"], f"{path}.mass")
        if v is not None and v < 0.0:
            ck.fail(m["mass"], f"{path}.mass", f"mass must be non-negative, got {v:g}")
        elif v is not None:
            mass = v
    else:
        ck.fail(node, path, "missing mass")
    com = np.zeros(3)
    if "com" in m:
        v = ck.vector(m["com"], f"{path}.com", 3)
        com = v if v is not None else com
    inertia = np.zeros((3, 3))
    if "inertia" in m:
        v = ck.matrix(m["inertia"], f"{path}.inertia", 3, 3)
        if v is not None:
            if np.max(np.abs(v - v.T)) > _PSD_TOL * max(1.0, np.max(np.abs(v))):
                ck.fail(m["inertia"], f"{path}.inertia", "inertia matrix is not symmetric")
            else:
                ev = np.linalg.eigvalsh(0.5 * (v + v.T))
                if ev[0] < -_PSD_TOL * max(1.0, ev[-1]):
                    ck.fail(m["inertia"], f"{path}.inertia", f"inertia is not positive semi-definite (eigenvalue {ev[0]:.3g})")
                elif ev[0] + ev[1] < ev[2] - _PSD_TOL * max(1.0, ev[-1]):
                    ck.fail(m["inertia"], f"{path}.inertia", "principal moments violate the triangle inequality")
                else:
                    inertia = v
    if mass is None:
        return SpatialInertia()
    if mass == 0.0 and np.any(inertia):
        ck.fail(node, path, "a massless body cannot have rotational inertia")
    return SpatialInertia(mass, com, inertia)


def _read_bodies(ck, node, path, names):
    if node is None:
        return {k: SpatialInertia() for k in names}
    m = ck.mapping(node, path, set(names))
    m = m or {}
    return {k: _read_inertia(ck, m.get(k), f"{path}.{k}") for k in names}


def _read_parallel(ck, node, m, path):
    vals = {}
    for key in ("L", "L1", "Lc", "Lc0"):
        if key not in m:
            ck.fail(node, path, f"missing {key}")
            continue
        v = ck.number(m[key], f"{path}.{key}")
        if v is None:
            continue
        if key in ("L", "L1") and v <= 0.0:
            ck.fail(m[key], f"{path}.{key}", f"link length must be positive (L, L1 > 0), got {v:g}")
        elif v < 0.0:
            ck.fail(m[key], f"{path}.{key}", f"offset must be non-negative, got {v:g}")
        vals[key] = v
    if len(vals) == 4 and vals["Lc"] + vals["Lc0"] <= 0.0:
        ck.fail(m["Lc"], f"{path}.Lc", "x0 = Lc + Lc0 must be positive")
    bodies = _read_bodies(ck, m.get("bodies"), f"{path}.bodies", PARALLEL_BODIES)
    if len(vals) != 4:
        return None
    return ParallelModuleParams(
        vals["L"],
        vals["L1"],
        vals["Lc"],
        vals["Lc0"],
        base_offset=_read_transform(ck, m.get("base_offset"), f"{path}.base_offset"),
        tip=_read_transform(ck, m.get("tip"), f"{path}.tip"),
        b0=bodies["B0"],
        b1=bodies["B1"],
        b3=bodies["B3"],
        b4=bodies["B4"],
        e=bodies["E"],
        name=str(m["name"].value) if "name" in m else "",
    )


def _read_serial(ck, node, m, path):
    screw = None
    if "screw" not in m:
        ck.fail(node, path, "missing screw")
    else:
        snode = m["screw"]
        if isinstance(snode.value, str):
            if snode.value not in _JOINT_SCREWS:
                ck.fail(snode, f"{path}.screw", f"unknown joint type {snode.value!r} (revolute, prismatic or a 6-vector)")
            else:
                screw = np.array(_JOINT_SCREWS[snode.value])
        else:
            screw = ck.vector(snode, f"{path}.screw", 6)
        if screw is not None:
            w = np.linalg.norm(screw[3:])
            lin = np.linalg.norm(screw[:3])
            if not (abs(w - 1.0) <= 1e-9 or (w <= 1e-9 and abs(lin - 1.0) <= 1e-9)):
                ck.fail(snode, f"{path}.screw", "screw must be unit (|angular| = 1, or angular = 0 and |linear| = 1)")
                screw = None
    limits = None
    if "limits" in m:
        v = ck.vector(m["limits"], f"{path}.limits", 2)
        if v is not None and not v[0] < v[1]:
            ck.fail(m["limits"], f"{path}.limits", "lower limit must be below upper limit")
        elif v is not None:
            limits = (float(v[0]), float(v[1]))
    bodies = _read_bodies(ck, m.get("bodies"), f"{path}.bodies", SERIAL_BODIES)
    joint_offset = _read_transform(ck, m.get("joint_offset"), f"{path}.joint_offset")
    tip = _read_transform(ck, m.get("tip"), f"{path}.tip")
    if screw is None:
        return None
    return SerialModuleParams(
        screw=screw,
        joint_offset=joint_offset,
        tip=tip,
        bc=bodies["Bc"],
        b4=bodies["B4"],
        limits=limits,
        name=str(m["name"].value) if "name" in m else "",
    )


def load_model(text: str) -> ManipulatorModel:
    """Parse and validate a ``.psm`` document.

    Raises:
        ParseError: malformed YAML (with line and column).
        ValidationError: every schema or physics problem found, with lines.
    """
    root = _compose(text)
    if root is None:
        raise ValidationError([(None, "", "empty document")])
    doc = _convert(root)
    ck = _Checker()
    top = ck.mapping(doc, "", {"format", "name", "gravity", "modules"})
    if top is None:
        raise ValidationError(ck.issues)
    if "format" not in top:
        ck.fail(doc, "format", f"missing format (expected {FORMAT!r})")
    elif top["format"].value != FORMAT:
        ck.fail(top["format"], "format", f"unsupported format {top['format'].value!r}, expected {FORMAT!r}")
    gravity = np.array([0.0, 0.0, -9.81])
    if "gravity" in top:
        v = ck.vector(top["gravity"], "gravity", 3)
        gravity = v if v is not None else gravity
    modules, mounts = [], []
    mnode = top.get("modules")
    if mnode is None or not isinstance(mnode.value, list) or not mnode.value:
        ck.fail(mnode if mnode is not None else doc, "modules", "need a non-empty list of modules")
    else:
        for i, node in enumerate(mnode.value):
            path = f"modules[{i}]"
            kind = node.value.get("kind") if isinstance(node.value, dict) else None
            if kind is None or kind.value not in ("parallel", "serial"):
                ck.fail(kind or node, f"{path}.kind", "kind must be 'parallel' or 'serial'")
                continue
            allowed = _PARALLEL_KEYS if kind.value == "parallel" else _SERIAL_KEYS
            m = ck.mapping(node, path, allowed)
            mounts.append(_read_transform(ck, m.get("mount"), f"{path}.mount"))
            reader = _read_parallel if kind.value == "parallel" else _read_serial
            modules.append(reader(ck, node, m, path))
    if ck.issues:
        raise ValidationError(ck.issues)
    name = str(top["name"].value) if "name" in top else ""
    return ManipulatorModel(tuple(modules), tuple(mounts), gravity, name=name)


def load_model_file(path) -> ManipulatorModel:
    return load_model(Path(path).read_text())


# ---------------------------------------------------------------------------
# serialization


def _f(v) -> float:
    return float(v)


def _transform_doc(t: Transform) -> dict:
    return {
        "translation": [_f(v) for v in t.translation],
        "rotation": [[_f(v) for v in row] for row in t.rotation],
    }


def _inertia_doc(m: SpatialInertia) -> dict:
    return {
        "mass": _f(m.mass),
        "com": [_f(v) for v in m.com],
        "inertia": [[_f(v) for v in row] for row in m.inertia_com],
    }


def model_to_dict(model: ManipulatorModel) -> dict:
    mods = []
    for mod, mount in zip(model.modules, model.mounts):
        if isinstance(mod, ParallelModuleParams):
            d = {"kind": "parallel", "name": mod.name, "mount": _transform_doc(mount)}
            d.update(L=_f(mod.L), L1=_f(mod.L1), Lc=_f(mod.Lc), Lc0=_f(mod.Lc0))
            d["base_offset"] = _transform_doc(mod.base_offset)
            d["tip"] = _transform_doc(mod.tip)
            d["bodies"] = {k: _inertia_doc(b) for k, b in zip(PARALLEL_BODIES, (mod.b0, mod.b1, mod.b3, mod.b4, mod.e))}
        else:
            d = {"kind": "serial", "name": mod.name, "mount": _transform_doc(mount)}
            d["screw"] = [_f(v) for v in mod.screw]
            d["joint_offset"] = _transform_doc(mod.joint_offset)
            d["tip"] = _transform_doc(mod.tip)
            if mod.limits is not None:
                d["limits"] = [_f(mod.limits[0]), _f(mod.limits[1])]
            d["bodies"] = {"Bc": _inertia_doc(mod.bc), "B4": _inertia_doc(mod.b4)}
        mods.append(d)
    return {
        "format": FORMAT,
        "name": model.name,
        "gravity": [_f(v) for v in model.gravity],
        "modules": mods,
    }


def serialize_model(model: ManipulatorModel) -> str:
    """YAML text that :func:`load_model` reads back to the same model."""
    return yaml.safe_dump(model_to_dict(model), sort_keys=False, default_flow_style=None, width=120)


def save_model(model: ManipulatorModel, path) -> None:
    Path(path).write_text(serialize_model(model))


def models_equal(a: ManipulatorModel, b: ManipulatorModel, atol: float = 1e-15) -> bool:
    """Field-by-field comparison within ``atol``."""
    da, db = model_to_dict(a), model_to_dict(b)

    def same(x, y):
        if isinstance(x, dict):
            return isinstance(y, dict) and x.keys() == y.keys() and all(same(x[k], y[k]) for k in x)
        if isinstance(x, list):
            return isinstance(y, list) and len(x) == len(y) and all(same(u, v) for u, v in zip(x, y))
        if isinstance(x, float):
            return isinstance(y, float) and abs(x - y) <= atol
        return x == y

    return same(da, db)


def _scale_transform(t: Transform, s: float) -> Transform:
    return Transform(t.rotation, t.translation * s)


def _scale_inertia(m: SpatialInertia, s: float) -> SpatialInertia:
    return SpatialInertia(m.mass * s**3, m.com * s, m.inertia_com * s**5)


def scale_model(model: ManipulatorModel, s: float, name: str | None = None) -> ManipulatorModel:
    """Geometrically similar model: lengths times ``s``, uniform density.

    Masses scale with ``s**3`` and rotational inertias with ``s**5``; prismatic
    joint limits scale with ``s``. Under gravity the natural frequencies grow
    as ``s**-0.5``.
    """
    mods = []
    for mod in model.modules:
        if isinstance(mod, ParallelModuleParams):
            mods.append(
                ParallelModuleParams(
                    mod.L * s,
                    mod.L1 * s,
                    mod.Lc * s,
                    mod.Lc0 * s,
                    base_offset=_scale_transform(mod.base_offset, s),
                    tip=_scale_transform(mod.tip, s),
                    b0=_scale_inertia(mod.b0, s),
                    b1=_scale_inertia(mod.b1, s),
                    b3=_scale_inertia(mod.b3, s),
                    b4=_scale_inertia(mod.b4, s),
                    e=_scale_inertia(mod.e, s),
                    name=mod.name,
                )
            )
        else:
            prismatic = mod.is_prismatic
            limits = mod.limits
            if limits is not None and prismatic:
                limits = (limits[0] * s, limits[1] * s)
            mods.append(
                SerialModuleParams(
                    screw=mod.screw,
                    joint_offset=_scale_transform(mod.joint_offset, s),
                    tip=_scale_transform(mod.tip, s),
                    bc=_scale_inertia(mod.bc, s),
                    b4=_scale_inertia(mod.b4, s),
                    limits=limits,
                    name=mod.name,
                )
            )
    mounts = tuple(_scale_transform(t, s) for t in model.mounts)
    return ManipulatorModel(tuple(mods), mounts, model.gravity, name=name if name is not None else model.name)


DEMO_MODELS = {"demo_1dof": "demo_1dof.psm", "demo_4dof": "demo_4dof.psm"}


def demo_model_path(name: str) -> Path:
    """Filesystem path of a bundled model (``demo_1dof`` or ``demo_4dof``)."""
    fname = DEMO_MODELS.get(name, name)
    return Path(str(resources.files("psmdyn") / "data" / fname))


def load_demo(name: str) -> ManipulatorModel:
    return load_model_file(demo_model_path(name))


def resolve_model(spec: str) -> ManipulatorModel:
    """Load a model from a path, or a bundled model by name."""
    if spec in DEMO_MODELS:
        return load_demo(spec)
    return load_model_file(spec)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Uniformly sampled actuator data.

    ``third`` holds accelerations when ``kind == "xddot"`` and forces when
    ``kind == "f"``. Arrays are ``(samples, n)``.
    """

    rate: float
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    third: np.ndarray
    kind: str = "xddot"

    def __post_init__(self):
        if self.kind not in ("xddot", "f"):
            raise ValueError(f"trajectory kind must be 'xddot' or 'f', got {self.kind!r}")
        self.t = np.asarray(self.t, dtype=float)
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.xdot = np.atleast_2d(np.asarray(self.xdot, dtype=float))
        self.third = np.atleast_2d(np.asarray(self.third, dtype=float))
        shapes = {self.x.shape, self.xdot.shape, self.third.shape}
        if len(shapes) != 1 or self.x.shape[0] != self.t.shape[0]:
            raise ValueError("trajectory channels have unequal lengths")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    @property
    def samples(self) -> int:
        return self.t.shape[0]

    @property
    def duration(self) -> float:
        return self.samples / self.rate

    @property
    def xddot(self) -> np.ndarray:
        if self.kind != "xddot":
            raise AttributeError("trajectory carries forces, not accelerations")
        return self.third

    @property
    def f(self) -> np.ndarray:
        if self.kind != "f":
            raise AttributeError("trajectory carries accelerations, not forces")
        return self.third

    def with_third(self, values, kind: str) -> Trajectory:
        return Trajectory(self.rate, self.t, self.x, self.xdot, values, kind)


def _channel_names(n: int, kind: str) -> list[str]:
    names = []
    for i in range(1, n + 1):
        names += [f"x{i}", f"xdot{i}", f"{kind}{i}"]
    return names


def write_trajectory(traj: Trajectory, path_or_buf) -> None:
    """Write a trajectory CSV with full float precision."""
    names = _channel_names(traj.n, traj.kind)
    cols = [traj.t[:, None]]
    for i in range(traj.n):
        cols += [traj.x[:, i : i + 1], traj.xdot[:, i : i + 1], traj.third[:, i : i + 1]]
    data = np.hstack(cols)
    buf = io.StringIO()
    buf.write(f"# channels: {','.join(names)}\n")
    buf.write(f"# rate: {traj.rate!r}\n")
    buf.write("t," + ",".join(names) + "\n")
    np.savetxt(buf, data, delimiter=",", fmt="%.17g")
    text = buf.getvalue()
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        Path(path_or_buf).write_text(text)


def read_trajectory(path_or_text, *, is_text: bool = False) -> Trajectory:
    """Read a trajectory CSV.

    Raises:
        ParseError: missing directives, a header that disagrees with the
            channel directive, or malformed rows (with line numbers).
    """
    text = path_or_text if is_text else Path(path_or_text).read_text()
    lines = text.splitlines()
    channels = None
    rate = None
    header_line = None
    for i, raw in enumerate(lines):
        s = raw.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if body.startswith("channels:"):
                channels = [c.strip() for c in body[len("channels:") :].split(",") if c.strip()]
            elif body.startswith("rate:"):
                try:
                    rate = float(body[len("rate:") :])
                except ValueError:
                    raise ParseError(f"bad rate directive {body!r}", line=i + 1) from None
            continue
        header_line = i
        break
    if channels is None:
        raise ParseError("missing '# channels:' directive", line=1)
    if header_line is None:
        raise ParseError("missing header row")
    header = [h.strip() for h in lines[header_line].split(",")]
    if header[0] != "t" or header[1:] != channels:
        raise ParseError("header does not match the channels directive", line=header_line + 1)
    if len(channels) % 3:
        raise ParseError("channels must come in (x, xdot, xddot|f) triples", line=header_line + 1)
    n = len(channels) // 3
    kinds = {c.rstrip("0123456789") for c in channels[2::3]}
    if len(kinds) != 1 or not kinds <= {"xddot", "f"}:
        raise ParseError("third channel of every actuator must be all xddot or all f", line=header_line + 1)
    kind = kinds.pop()
    if _channel_names(n, kind) != channels:
        raise ParseError("channels must be named x1,xdot1,<kind>1,x2,...", line=header_line + 1)
    rows = []
    for i in range(header_line + 1, len(lines)):
        s = lines[i].strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split(",")
        if len(parts) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(parts)}", line=i + 1)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ParseError("non-numeric value", line=i + 1) from None
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    t = data[:, 0]
    if rate is None:
        if len(t) < 2:
            raise ParseError("missing '# rate:' directive")
        rate = 1.0 / (t[1] - t[0])
    if len(t) > 1:
        dt = np.diff(t)
        if np.max(np.abs(dt - 1.0 / rate)) > 1e-9 * max(1.0, t[-1]):
            raise ParseError("samples are not uniformly spaced at the declared rate")
    body = data[:, 1:].reshape(len(t), n, 3)
    return Trajectory(rate, t, body[:, :, 0], body[:, :, 1], body[:, :, 2], kind)


@dataclass(frozen=True)
class SinusoidSpec:
    """``x_i(t) = center_i + amplitude_i * sin(omega_i * t)``."""

    center: tuple
    amplitude: tuple
    omega: tuple
    duration: float = 10.0
    rate: float = 1000.0


DEFAULT_OMEGAS = (1.0, 1.3, 1.7, 2.3)
DEFAULT_FRACTION = 0.3


def default_sinusoid(model: ManipulatorModel, duration: float = 10.0, rate: float = 1000.0, fraction: float = DEFAULT_FRACTION) -> SinusoidSpec:
    """Sinusoids around the middle of each actuator range.

    The amplitude is ``fraction`` of the range width, so the motion sweeps
    ``2 * fraction`` of the range. Serial joints without limits oscillate
    around zero with amplitude ``fraction`` (radians or metres).
    """
    centers, amps, omegas = [], [], []
    for i, mod in enumerate(model.modules):
        lim = mod.reachable_range() if isinstance(mod, ParallelModuleParams) else mod.limits
        if lim is None:
            centers.append(0.0)
            amps.append(fraction)
        else:
            centers.append(0.5 * (lim[0] + lim[1]))
            amps.append(fraction * (lim[1] - lim[0]))
        omegas.append(DEFAULT_OMEGAS[i % len(DEFAULT_OMEGAS)])
    return SinusoidSpec(tuple(centers), tuple(amps), tuple(omegas), duration, rate)


def check_sinusoid(model: ManipulatorModel, spec: SinusoidSpec) -> None:
    """Raise :class:`RangeError` if a sinusoid leaves its actuator range."""
    for i, mod in enumerate(model.modules):
        c, a = spec.center[i], abs(spec.amplitude[i])
        lo, hi = c - a, c + a
        if isinstance(mod, ParallelModuleParams):
            rlo, rhi = mod.reachable_range()
            if lo <= rlo or hi >= rhi:
                side = "upper" if hi >= rhi else "lower"
                bound = rhi if side == "upper" else rlo
                why = "arccos argument reaches 1 (loop fully stretched)" if side == "upper" else (
                    "actuator position must stay non-negative" if rlo == 0.0 else "arccos argument reaches -1 (loop folded)"
                )
                raise RangeError(
                    f"module {i}: sinusoid spans [{lo:.6g}, {hi:.6g}] but must stay inside ({rlo:.6g}, {rhi:.6g}); "
                    f"{side} bound {bound:.6g}: {why}"
                )
            for xv in (lo, hi):
                try:
                    solve_closure_from_x(mod, xv)
                except ConfigurationError as exc:
                    raise RangeError(f"module {i}: x = {xv:.6g} is not a valid configuration: {exc}") from None
        elif mod.limits is not None and (lo < mod.limits[0] or hi > mod.limits[1]):
            raise RangeError(
                f"module {i}: sinusoid spans [{lo:.6g}, {hi:.6g}] outside joint limits {list(mod.limits)}"
            )


def generate_sinusoid_trajectory(model: ManipulatorModel, spec: SinusoidSpec | None = None) -> Trajectory:
    """Sample a sinusoidal actuator trajectory with exact derivatives.

    Raises:
        RangeError: a sinusoid leaves the reachable, non-singular range.
    """
    spec = default_sinusoid(model) if spec is None else spec
    n = model.n
    if not (len(spec.center) == len(spec.amplitude) == len(spec.omega) == n):
        raise ValueError(f"sinusoid spec needs {n} entries per field")
    if spec.rate <= 0 or spec.duration <= 0:
        raise ValueError("rate and duration must be positive")
    check_sinusoid(model, spec)
    samples = int(round(spec.duration * spec.rate))
    t = np.arange(samples) / spec.rate
    c = np.asarray(spec.center, dtype=float)
    a = np.asarray(spec.amplitude, dtype=float)
    w = np.asarray(spec.omega, dtype=float)
    ph = np.outer(t, w)
    x = c + a * np.sin(ph)
    xd = a * w * np.cos(ph)
    xdd = -a * w * w * np.sin(ph)
    return Trajectory(spec.rate, t, x, xd, xdd, "xddot")


__all__ = [
    "DEMO_MODELS",
    "FORMAT",
    "SinusoidSpec",
    "Trajectory",
    "check_sinusoid",
    "default_sinusoid",
    "demo_model_path",
    "generate_sinusoid_trajectory",
    "load_demo",
    "load_model",
    "load_model_file",
    "model_to_dict",
    "models_equal",
    "read_trajectory",
    "resolve_model",
    "save_model",
    "scale_model",
    "serialize_model",
    "write_trajectory",
]
