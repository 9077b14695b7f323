"""
Forward and inverse dynamics of a serial chain of 1-DoF modules.

Each module has a base frame ``Bc`` and an output frame ``E``. ``mounts[k]``
is the pose of module ``k``'s ``Bc`` in the ``E`` frame of module ``k - 1``
(in the world frame for ``k = 0``). Gravity enters as a fictitious upward
acceleration of the world frame, so no body carries a gravity wrench.

:func:`forward_dynamics` runs the three-sweep recursion (kinematics outward,
articulated inertias inward, accelerations outward) with a cost linear in the
number of modules. :func:`inverse_dynamics` is an independent route built on
the closed-form loop force and a plain Newton-Euler sweep; it is used as the
oracle for the forward algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .assembly import (
    ParallelAssembly,
    ParallelForward,
    SerialAssembly,
    SerialKinematics,
    SerialModuleParams,
    parallel_backward_pass,
    parallel_fd,
    parallel_forward_pass,
    serial_backward,
    serial_fd,
    serial_kinematics,
)
from .closed_loop import (
    ClosureState,
    KMatrices,
    ParallelModuleParams,
    actuator_force_cramer,
    base_wrench_direct,
    k_matrices,
    local_wrenches,
    loop_accelerations,
    loop_kinematics,
    solve_closure_from_x,
)
from .errors import ConfigurationError, ModelDefinitionError
from .spatial import Transform, _adjoint_rp, congruence

Module = Union[ParallelModuleParams, SerialModuleParams]

_ZERO6 = np.zeros(6)


@dataclass(frozen=True, eq=False)
class ManipulatorModel:
    """Serial chain of modules.

    Attributes:
        modules: parallel or serial module parameters, base to tip.
        mounts: pose of each module's base frame in the previous module's
            output frame (world frame for the first one).
        gravity: gravitational acceleration in world coordinates [m/s^2].
        name: free-form label.
    """

    modules: tuple
    mounts: tuple = ()
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    name: str = ""

    def __post_init__(self):
        mods = tuple(self.modules)
        if not mods:
            raise ModelDefinitionError("a model needs at least one module")
        for m in mods:
            if not isinstance(m, (ParallelModuleParams, SerialModuleParams)):
                raise ModelDefinitionError(f"unsupported module type {type(m).__name__}")
        mounts = tuple(self.mounts) if self.mounts else tuple(Transform() for _ in mods)
        if len(mounts) != len(mods):
            raise ModelDefinitionError(f"{len(mods)} modules but {len(mounts)} mounts")
        g = np.array(self.gravity, dtype=float).reshape(3)
        g.setflags(write=False)
        object.__setattr__(self, "modules", mods)
        object.__setattr__(self, "mounts", mounts)
        object.__setattr__(self, "gravity", g)

    @property
    def n(self) -> int:
        return len(self.modules)

    def __len__(self) -> int:
        return len(self.modules)

    @cached_property
    def mount_maps(self) -> tuple:
        """Twist maps from the previous output frame to each module base."""
        out = []
        for t in self.mounts:
            rt = t.rotation.T
            m = _adjoint_rp(rt, -rt @ t.translation)
            m.setflags(write=False)
            out.append(m)
        return tuple(out)

    @property
    def base_acceleration(self) -> np.ndarray:
        """World-frame acceleration that stands in for gravity."""
        return np.concatenate([-self.gravity, np.zeros(3)])


@dataclass
class ActuatorState:
    """Actuator positions, rates and (optionally) forces, one entry per module."""

    x: np.ndarray
    xdot: np.ndarray
    f: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.xdot = np.atleast_1d(np.asarray(self.xdot, dtype=float))
        if self.f is not None:
            self.f = np.atleast_1d(np.asarray(self.f, dtype=float))

    def check(self, n: int) -> None:
        for name in ("x", "xdot", "f"):
            v = getattr(self, name)
            if v is not None and v.shape != (n,):
                raise ValueError(f"state.{name} has shape {v.shape}, expected ({n},)")


@dataclass
class ModuleDiagnostics:
    """Per-module record kept by :func:`forward_dynamics`."""

    kind: str
    alpha: float
    residual: float
    nu_bc: np.ndarray
    nu_e: np.ndarray
    nudot_bc: np.ndarray
    nudot_e: np.ndarray
    MA_bc: np.ndarray
    pA_bc: np.ndarray
    closure: ClosureState | None = None
    psi: np.ndarray | None = None
    delta: float | None = None


@dataclass
class DynamicsResult:
    xddot: np.ndarray
    modules: list


def _as_state(state, xdot=None, f=None) -> ActuatorState:
    if isinstance(state, ActuatorState):
        return state
    return ActuatorState(state, xdot, f)


def _tag(exc: ConfigurationError, k: int) -> ConfigurationError:
    if exc.module is None:
        exc.module = k
    return exc


@dataclass
class _ParallelRecord:
    params: ParallelModuleParams
    closure: ClosureState
    fwd: ParallelForward
    kmat: KMatrices
    asm: ParallelAssembly | None = None


@dataclass
class _SerialRecord:
    params: SerialModuleParams
    kin: SerialKinematics
    asm: SerialAssembly | None = None


def _first_pass(model: ManipulatorModel, x, xdot) -> list:
    recs = []
    nu_prev = _ZERO6
    for k, (mod, xm) in enumerate(zip(model.modules, model.mount_maps)):
        nu_bc = xm @ nu_prev
        try:
            if isinstance(mod, ParallelModuleParams):
                cs = solve_closure_from_x(mod, x[k], xdot[k])
                fwd = parallel_forward_pass(mod, cs, nu_bc)
                recs.append(_ParallelRecord(mod, cs, fwd, k_matrices(mod, cs)))
                nu_prev = fwd.kin.nu_e
            else:
                kin = serial_kinematics(mod, x[k], xdot[k], nu_bc)
                recs.append(_SerialRecord(mod, kin))
                nu_prev = kin.nu_e
        except ConfigurationError as exc:
            raise _tag(exc, k)
    return recs


def forward_dynamics(
    model: ManipulatorModel,
    state,
    xdot=None,
    f=None,
    tip_wrench=None,
    tip_inertia=None,
) -> DynamicsResult:
    """Actuator accelerations for given positions, rates and forces.

    Args:
        model: the manipulator.
        state: an :class:`ActuatorState`, or the position vector when
            ``xdot`` and ``f`` are passed separately.
        tip_wrench: wrench the last output frame exerts on its environment,
            in that frame's coordinates (defaults to zero).
        tip_inertia: 6x6 inertia rigidly attached to the last output frame,
            in its coordinates. Together with ``tip_wrench`` it lets an
            articulated sub-chain stand in for the modules it replaces.

    Raises:
        ConfigurationError: a singular, unreachable or degenerate module,
            with ``module`` set to its index.
    """
    st = _as_state(state, xdot, f)
    n = model.n
    st.check(n)
    if st.f is None:
        raise ValueError("forward dynamics needs actuator forces")
    recs = _first_pass(model, st.x, st.xdot)
    maps = model.mount_maps

    # inward sweep
    ma_next = None
    pa_next = None
    for k in range(n - 1, -1, -1):
        rec = recs[k]
        if ma_next is None:
            ma_e = np.zeros((6, 6)) if tip_inertia is None else np.array(tip_inertia, dtype=float)
            pa_e = np.zeros(6) if tip_wrench is None else np.array(tip_wrench, dtype=float)
        else:
            xm = maps[k + 1]
            ma_e = congruence(ma_next, xm)
            pa_e = xm.T @ pa_next
        try:
            if isinstance(rec, _ParallelRecord):
                ma_e = ma_e + rec.params.e.matrix
                pa_e = pa_e + rec.fwd.kin.bias_e
                rec.asm = parallel_backward_pass(rec.fwd, rec.kmat, ma_e, pa_e, st.f[k])
            else:
                rec.asm = serial_backward(rec.params, ma_e, pa_e, st.f[k], rec.kin)
        except ConfigurationError as exc:
            raise _tag(exc, k)
        ma_next = rec.asm.MA_bc
        pa_next = rec.asm.pA_bc

    # outward sweep
    xdd = np.empty(n)
    diags = []
    a_prev = model.base_acceleration
    for k, rec in enumerate(recs):
        a_bc = maps[k] @ a_prev
        try:
            if isinstance(rec, _ParallelRecord):
                asm = rec.asm
                xdd[k] = parallel_fd(asm.alpha, asm.psi, asm.delta, st.f[k], a_bc)
                acc = loop_accelerations(rec.closure, rec.fwd.kin, a_bc, xdd[k])
                a_prev = acc.nudot_e
                diags.append(
                    ModuleDiagnostics(
                        "parallel",
                        asm.alpha,
                        rec.closure.residual,
                        rec.fwd.kin.nu_bc,
                        rec.fwd.kin.nu_e,
                        a_bc,
                        a_prev,
                        asm.MA_bc,
                        asm.pA_bc,
                        closure=rec.closure,
                        psi=asm.psi,
                        delta=asm.delta,
                    )
                )
            else:
                asm = rec.asm
                xdd[k], a_b4 = serial_fd(asm, rec.kin, rec.params.screw, a_bc)
                a_prev = rec.kin.X_e @ a_b4
                diags.append(
                    ModuleDiagnostics(
                        "serial",
                        asm.alpha,
                        0.0,
                        rec.kin.nu_bc,
                        rec.kin.nu_e,
                        a_bc,
                        a_prev,
                        asm.MA_bc,
                        asm.pA_bc,
                        psi=asm.psi,
                    )
                )
        except ConfigurationError as exc:
            raise _tag(exc, k)
    return DynamicsResult(xdd, diags)


def inverse_dynamics(model: ManipulatorModel, state, xddot, xdot=None, tip_wrench=None) -> np.ndarray:
    """Actuator forces that produce ``xddot`` (independent oracle).

    Loop forces come from the closed-form 7x7 system, serial joint forces
    from projecting the joint wrench on the screw. ``state`` is an
    :class:`ActuatorState` or a position vector with ``xdot`` given.
    """
    st = _as_state(state, xdot)
    n = model.n
    st.check(n)
    xddot = np.atleast_1d(np.asarray(xddot, dtype=float))
    if xddot.shape != (n,):
        raise ValueError(f"xddot has shape {xddot.shape}, expected ({n},)")
    maps = model.mount_maps

    # outward: velocities and accelerations
    items = []
    nu_prev = _ZERO6
    a_prev = model.base_acceleration
    for k, mod in enumerate(model.modules):
        nu_bc = maps[k] @ nu_prev
        a_bc = maps[k] @ a_prev
        try:
            if isinstance(mod, ParallelModuleParams):
                cs = solve_closure_from_x(mod, st.x[k], st.xdot[k])
                kin = loop_kinematics(mod, cs, nu_bc)
                acc = loop_accelerations(cs, kin, a_bc, xddot[k])
                items.append((mod, cs, kin, acc))
                nu_prev, a_prev = kin.nu_e, acc.nudot_e
            else:
                kin = serial_kinematics(mod, st.x[k], st.xdot[k], nu_bc)
                a_b4 = kin.X_b4 @ a_bc + kin.c_b4 + mod.screw * xddot[k]
                items.append((mod, None, kin, (a_bc, a_b4)))
                nu_prev, a_prev = kin.nu_e, kin.X_e @ a_b4
        except ConfigurationError as exc:
            raise _tag(exc, k)

    # inward: wrenches
    f = np.empty(n)
    w_next = None
    for k in range(n - 1, -1, -1):
        mod, cs, kin, acc = items[k]
        if w_next is None:
            w_ext = np.zeros(6) if tip_wrench is None else np.array(tip_wrench, dtype=float)
        else:
            w_ext = maps[k + 1].T @ w_next
        try:
            if cs is not None:
                w = local_wrenches(mod, kin, acc, w_ext)
                f[k] = actuator_force_cramer(mod, cs, w)
                w_next = base_wrench_direct(kin, w)
            else:
                a_bc, a_b4 = acc
                w_b4 = mod.b4.matrix @ a_b4 + kin.bias_b4 + kin.X_e.T @ w_ext
                f[k] = float(mod.screw @ w_b4)
                w_next = mod.bc.matrix @ a_bc + kin.bias_bc + kin.X_b4.T @ w_b4
        except ConfigurationError as exc:
            raise _tag(exc, k)
    return f


def mass_matrix_oracle(model: ManipulatorModel, x, xdot) -> tuple[np.ndarray, np.ndarray]:
    """Joint-space mass matrix and bias from inverse dynamics alone.

    Column ``k`` is ``ID(e_k) - ID(0)``; the bias is ``ID(0)`` (Coriolis and
    gravity terms).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xdot = np.atleast_1d(np.asarray(xdot, dtype=float))
    st = ActuatorState(x, xdot)
    n = model.n
    bias = inverse_dynamics(model, st, np.zeros(n))
    h = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        h[:, k] = inverse_dynamics(model, st, e) - bias
    return h, bias


def dense_forward_dynamics(model: ManipulatorModel, x, xdot, f) -> np.ndarray:
    """Forward dynamics by solving the oracle mass-matrix system."""
    h, bias = mass_matrix_oracle(model, x, xdot)
    return np.linalg.solve(h, np.asarray(f, dtype=float) - bias)


# ---------------------------------------------------------------------------
# kinematics and energy


def _module_bodies(mod: Module, x: float, xdot: float, nu_bc):
    """Yield ``(pose in Bc, twist, inertia)`` for every body, plus the output pose and twist."""
    if isinstance(mod, ParallelModuleParams):
        cs = solve_closure_from_x(mod, x, xdot)
        kin = loop_kinematics(mod, cs, nu_bc)
        bodies = [
            (Transform(), kin.nu_bc, mod.b0),
            (kin.pose(mod, cs, "B1"), kin.nu_b1, mod.b1),
            (kin.pose(mod, cs, "B3"), kin.nu_b3, mod.b3),
            (kin.pose(mod, cs, "B4"), kin.nu_b4, mod.b4),
            (kin.pose(mod, cs, "E"), kin.nu_e, mod.e),
        ]
        return bodies, kin.pose(mod, cs, "E"), kin.nu_e
    kin = serial_kinematics(mod, x, xdot, nu_bc)
    bodies = [
        (Transform(), kin.nu_bc, mod.bc),
        (kin.pose_b4, kin.nu_b4, mod.b4),
    ]
    return bodies, kin.pose_b4.compose(mod.tip), kin.nu_e


def forward_kinematics(model: ManipulatorModel, x) -> list[Transform]:
    """World pose of every module's output frame."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    poses = []
    world = Transform()
    for k, (mod, mount) in enumerate(zip(model.modules, model.mounts)):
        base = world.compose(mount)
        try:
            _, tip, _ = _module_bodies(mod, x[k], 0.0, _ZERO6)
        except ConfigurationError as exc:
            raise _tag(exc, k)
        world = base.compose(tip)
        poses.append(world)
    return poses


def mechanical_energy(model: ManipulatorModel, x, xdot) -> tuple[float, float]:
    """Kinetic and gravitational potential energy of every body.

    Potential energy is zero with all centres of mass at the world origin.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xdot = np.atleast_1d(np.asarray(xdot, dtype=float))
    g = model.gravity
    kinetic = 0.0
    potential = 0.0
    world = Transform()
    nu_prev = _ZERO6
    for k, (mod, mount, xm) in enumerate(zip(model.modules, model.mounts, model.mount_maps)):
        base = world.compose(mount)
        nu_bc = xm @ nu_prev
        try:
            bodies, tip, nu_tip = _module_bodies(mod, x[k], xdot[k], nu_bc)
        except ConfigurationError as exc:
            raise _tag(exc, k)
        for pose, nu, inertia in bodies:
            if inertia.is_zero():
                continue
            kinetic += 0.5 * float(nu @ inertia.matrix @ nu)
            com_world = base.compose(pose).apply(inertia.com)
            potential -= inertia.mass * float(g @ com_world)
        world = base.compose(tip)
        nu_prev = nu_tip
    return kinetic, potential


def total_energy(model: ManipulatorModel, x, xdot) -> float:
    t, v = mechanical_energy(model, x, xdot)
    return t + v


def identical_chain(module: Module, n: int, mount: Transform | None = None, gravity=None) -> ManipulatorModel:
    """Chain of ``n`` copies of one module, each mounted by ``mount``."""
    mount = Transform() if mount is None else mount
    kw = {} if gravity is None else {"gravity": gravity}
    return ManipulatorModel(tuple([module] * n), tuple([mount] * n), **kw)


def joint_limits(model: ManipulatorModel) -> list[tuple[float, float] | None]:
    """Actuator range per module: the reachable interval for loops, ``limits`` for joints."""
    out = []
    for mod in model.modules:
        if isinstance(mod, ParallelModuleParams):
            out.append(mod.reachable_range())
        else:
            out.append(mod.limits)
    return out


__all__ = [
    "ActuatorState",
    "DynamicsResult",
    "ManipulatorModel",
    "ModuleDiagnostics",
    "dense_forward_dynamics",
    "forward_dynamics",
    "forward_kinematics",
    "identical_chain",
    "inverse_dynamics",
    "joint_limits",
    "mass_matrix_oracle",
    "mechanical_energy",
    "total_energy",
]
