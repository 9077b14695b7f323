"""
Articulated-body assembly for closed-loop and single-joint modules.

A closed loop is reduced to a scalar actuator law

    xddot = (f - psi . nudot_bc - delta) / alpha

plus an assembled base inertia ``MA_bc`` and bias ``pA_bc`` such that the
wrench the loop exerts at its base frame is ``MA_bc nudot_bc + pA_bc``.
Single-joint modules use the classic articulated-body recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .closed_loop import (
    ClosureState,
    KMatrices,
    LoopKinematics,
    ParallelModuleParams,
    loop_kinematics,
)
from .errors import DegenerateInertia
from .spatial import (
    S_X,
    S_Z,
    SpatialInertia,
    Transform,
    _adjoint_rp,
    bracket,
    bracket_dual,
    check_unit_screw,
    congruence,
    exp_screw,
    mm6,
)
from .tolerances import ALPHA_TOL


def assemble_tip_inertia(m_b1, bias_b1, ma_e, pa_e, x_e):
    """Lump the downstream articulated inertia at ``E`` into the upper link.

    Args:
        m_b1: 6x6 inertia of the upper link.
        bias_b1: its wrench bias.
        ma_e, pa_e: articulated inertia and bias at ``E`` (``E`` coordinates).
        x_e: twist map ``B1 -> E``.

    Returns:
        ``(M~_B1, p~_B1)``.
    """
    return m_b1 + congruence(ma_e, x_e), bias_b1 + x_e.T @ pa_e


# ---------------------------------------------------------------------------
# closed loop


@dataclass
class ParallelForward:
    """First-forward-pass quantities of a loop (independent of accelerations)."""

    params: ParallelModuleParams
    state: ClosureState
    kin: LoopKinematics
    xi1: np.ndarray
    xi2: np.ndarray
    xi4: np.ndarray
    xi5: np.ndarray
    xi7: np.ndarray
    xi8: np.ndarray

    def xi3(self, nudot_bc):
        return self.kin.X_b1 @ nudot_bc + self.xi2

    def xi6(self, nudot_bc):
        return self.kin.X_b3 @ nudot_bc + self.xi5

    def xi9(self, nudot_bc):
        return self.kin.X_b4 @ nudot_bc + self.xi8


def parallel_forward_pass(p: ParallelModuleParams, state: ClosureState, nu_bc) -> ParallelForward:
    """Velocity-dependent terms of the loop's acceleration expansion."""
    kin = loop_kinematics(p, state, nu_bc)
    xi1 = S_Z * state.k1
    xi2 = kin.c_b1.copy()
    xi2[5] += state.k4
    xi4 = S_Z * state.k2
    xi5 = kin.c_b3.copy()
    xi5[5] += state.k5
    xi7 = kin.X_b4b3 @ xi4
    xi7[0] += 1.0
    xi8 = kin.X_b4b3 @ xi5 + kin.c_b4
    return ParallelForward(p, state, kin, xi1, xi2, xi4, xi5, xi7, xi8)


@dataclass
class ParallelAssembly:
    """Backward-pass quantities of a loop.

    ``alpha``, ``psi`` and ``delta`` give the actuator law; ``MA_bc`` and
    ``pA_bc`` the assembled base inertia and bias. ``f`` is the actuator
    force the bias terms were built with.
    """

    f: float
    M_b1_tilde: np.ndarray
    p_b1_tilde: np.ndarray
    KM1: np.ndarray
    KM3: np.ndarray
    KM4: np.ndarray
    xi_alpha: np.ndarray
    xi_gamma: np.ndarray
    xi_delta: np.ndarray
    Psi: np.ndarray
    alpha: float
    psi: np.ndarray
    delta: float
    Psi_b1: np.ndarray
    Psi_b3: np.ndarray
    Psi_b4: np.ndarray
    xi_b1: np.ndarray
    xi_b3: np.ndarray
    xi_b4: np.ndarray
    MA_bc: np.ndarray
    pA_bc: np.ndarray

    def xi_beta(self, fwd: ParallelForward, nudot_bc) -> np.ndarray:
        """Bias of the actuator wrench for a known base acceleration."""
        return (
            self.KM1 @ fwd.xi3(nudot_bc)
            + self.KM3 @ fwd.xi6(nudot_bc)
            + self.KM4 @ fwd.xi9(nudot_bc)
            + self.xi_gamma
        )

    def beta(self, fwd: ParallelForward, nudot_bc) -> float:
        return float(self.xi_beta(fwd, nudot_bc)[0])


def parallel_backward_pass(
    fwd: ParallelForward,
    kmat: KMatrices,
    ma_e,
    pa_e,
    f: float,
) -> ParallelAssembly:
    """Assemble a loop's actuator law and base articulated inertia.

    Args:
        fwd: output of :func:`parallel_forward_pass`.
        kmat: actuator-wrench maps for the same state.
        ma_e, pa_e: articulated inertia and bias at ``E`` (own body included).
        f: actuator force.

    Raises:
        DegenerateInertia: if the scalar inertia at the actuator is not
            positive.
    """
    p, kin = fwd.params, fwd.kin
    m3 = p.b3.matrix
    m4 = p.b4.matrix
    mt, pt = assemble_tip_inertia(p.b1.matrix, kin.bias_b1, ma_e, pa_e, kin.X_e)

    km1 = mm6(kmat.K1, mt)
    km3 = mm6(kmat.K3, m3)
    km4 = mm6(kmat.K4, m4)

    xi_alpha = km1 @ fwd.xi1 + km3 @ fwd.xi4 + km4 @ fwd.xi7
    alpha = float(xi_alpha[0])
    if not alpha > ALPHA_TOL:
        raise DegenerateInertia(f"articulated actuator inertia alpha = {alpha:.3g} is not positive")
    xi_gamma = kmat.K1 @ pt + kmat.K3 @ kin.bias_b3 + kmat.K4 @ kin.bias_b4
    big_psi = mm6(km1, kin.X_b1) + mm6(km3, kin.X_b3) + mm6(km4, kin.X_b4)
    xi_delta = km1 @ fwd.xi2 + km3 @ fwd.xi5 + km4 @ fwd.xi8 + xi_gamma
    psi = big_psi[0].copy()
    delta = float(xi_delta[0])

    inv_a = 1.0 / alpha
    scale = inv_a * (f - delta)
    psi_b1 = kin.X_b1 - np.outer(fwd.xi1 * inv_a, psi)
    psi_b3 = kin.X_b3 - np.outer(fwd.xi4 * inv_a, psi)
    psi_b4 = kin.X_b4 - np.outer(fwd.xi7 * inv_a, psi)
    xi_b1 = fwd.xi1 * scale + fwd.xi2
    xi_b3 = fwd.xi4 * scale + fwd.xi5
    xi_b4 = fwd.xi7 * scale + fwd.xi8

    ma_bc = (
        p.b0.matrix
        + mm6(kin.X_b1.T, mm6(mt, psi_b1))
        + mm6(kin.X_b3.T, mm6(m3, psi_b3))
        + mm6(kin.X_b4.T, mm6(m4, psi_b4))
    )
    pa_bc = (
        kin.bias_b0
        + kin.X_b1.T @ (mt @ xi_b1 + pt)
        + kin.X_b3.T @ (m3 @ xi_b3 + kin.bias_b3)
        + kin.X_b4.T @ (m4 @ xi_b4 + kin.bias_b4)
    )
    return ParallelAssembly(
        f=float(f),
        M_b1_tilde=mt,
        p_b1_tilde=pt,
        KM1=km1,
        KM3=km3,
        KM4=km4,
        xi_alpha=xi_alpha,
        xi_gamma=xi_gamma,
        xi_delta=xi_delta,
        Psi=big_psi,
        alpha=alpha,
        psi=psi,
        delta=delta,
        Psi_b1=psi_b1,
        Psi_b3=psi_b3,
        Psi_b4=psi_b4,
        xi_b1=xi_b1,
        xi_b3=xi_b3,
        xi_b4=xi_b4,
        MA_bc=ma_bc,
        pA_bc=pa_bc,
    )


def parallel_fd(alpha: float, psi, delta: float, f: float, nudot_bc) -> float:
    """Actuator acceleration from the base-acceleration-linear law."""
    if not alpha > ALPHA_TOL:
        raise DegenerateInertia(f"articulated actuator inertia alpha = {alpha:.3g} is not positive")
    return (f - float(np.dot(psi, nudot_bc)) - delta) / alpha


def parallel_fd_beta(alpha: float, beta: float, f: float) -> float:
    """Actuator acceleration from ``f = alpha xddot + beta``."""
    if not alpha > ALPHA_TOL:
        raise DegenerateInertia(f"articulated actuator inertia alpha = {alpha:.3g} is not positive")
    return (f - beta) / alpha


# ---------------------------------------------------------------------------
# single-joint module


@dataclass(frozen=True, eq=False)
class SerialModuleParams:
    """Single-joint module: base frame ``Bc``, moving body ``B4``, output ``E``.

    Attributes:
        screw: unit joint screw in ``B4`` coordinates (``S_Z`` revolute,
            ``S_X`` prismatic by convention; any unit screw works).
        joint_offset: pose of ``B4`` in ``Bc`` at zero joint position.
        tip: pose of ``E`` in ``B4``.
        bc, b4: body inertias.
        limits: optional ``(lower, upper)`` joint range used for trajectory
            generation.
    """

    screw: np.ndarray = field(default_factory=lambda: S_Z.copy())
    joint_offset: Transform = field(default_factory=Transform)
    tip: Transform = field(default_factory=Transform)
    bc: SpatialInertia = field(default_factory=SpatialInertia)
    b4: SpatialInertia = field(default_factory=SpatialInertia)
    limits: tuple[float, float] | None = None
    name: str = ""

    kind = "serial"

    def __post_init__(self):
        s = check_unit_screw(self.screw)
        s.setflags(write=False)
        object.__setattr__(self, "screw", s)
        if self.limits is not None:
            object.__setattr__(self, "limits", (float(self.limits[0]), float(self.limits[1])))

    @property
    def is_prismatic(self) -> bool:
        return not np.any(self.screw[3:])

    @cached_property
    def tip_map(self) -> np.ndarray:
        t = self.tip
        rt = t.rotation.T
        return _adjoint_rp(rt, -rt @ t.translation)

    def joint_pose(self, x: float) -> Transform:
        """Pose of ``B4`` in ``Bc``."""
        return self.joint_offset.compose(exp_screw(self.screw, x))


@dataclass
class SerialKinematics:
    x: float
    xdot: float
    pose_b4: Transform
    X_b4: np.ndarray
    X_e: np.ndarray
    nu_bc: np.ndarray
    nu_b4: np.ndarray
    nu_e: np.ndarray
    c_b4: np.ndarray
    bias_bc: np.ndarray
    bias_b4: np.ndarray


def serial_kinematics(p: SerialModuleParams, x: float, xdot: float, nu_bc) -> SerialKinematics:
    nu_bc = np.asarray(nu_bc, dtype=float)
    pose = p.joint_pose(x)
    rt = pose.rotation.T
    x_b4 = _adjoint_rp(rt, -rt @ pose.translation)
    sq = p.screw * xdot
    nu_b4 = x_b4 @ nu_bc + sq
    nu_e = p.tip_map @ nu_b4
    return SerialKinematics(
        x=float(x),
        xdot=float(xdot),
        pose_b4=pose,
        X_b4=x_b4,
        X_e=p.tip_map,
        nu_bc=nu_bc,
        nu_b4=nu_b4,
        nu_e=nu_e,
        c_b4=bracket(nu_b4, sq),
        bias_bc=-bracket_dual(nu_bc, p.bc.matrix @ nu_bc),
        bias_b4=-bracket_dual(nu_b4, p.b4.matrix @ nu_b4),
    )


@dataclass
class SerialAssembly:
    f: float
    MA_b4: np.ndarray
    pA_b4: np.ndarray
    psi: np.ndarray
    alpha: float
    u: float
    Ma_b4: np.ndarray
    pa_b4: np.ndarray
    MA_bc: np.ndarray
    pA_bc: np.ndarray


def serial_backward(p: SerialModuleParams, ma_e, pa_e, f: float, kin: SerialKinematics) -> SerialAssembly:
    """Articulated-body step across one joint.

    Raises:
        DegenerateInertia: if ``alpha = s^T MA_B4 s`` is not positive.
    """
    s = p.screw
    ma_b4 = p.b4.matrix + congruence(ma_e, kin.X_e)
    pa_b4 = kin.bias_b4 + kin.X_e.T @ pa_e
    psi = s @ ma_b4
    alpha = float(psi @ s)
    if not alpha > ALPHA_TOL:
        raise DegenerateInertia(f"articulated joint inertia alpha = {alpha:.3g} is not positive")
    u = float(f) - float(s @ pa_b4)
    m_a = ma_b4 - np.outer(psi, psi) / alpha
    p_a = pa_b4 + m_a @ kin.c_b4 + psi * (u / alpha)
    ma_bc = p.bc.matrix + congruence(m_a, kin.X_b4)
    pa_bc = kin.bias_bc + kin.X_b4.T @ p_a
    return SerialAssembly(float(f), ma_b4, pa_b4, psi, alpha, u, m_a, p_a, ma_bc, pa_bc)


def serial_fd(asm: SerialAssembly, kin: SerialKinematics, screw, nudot_bc) -> tuple[float, np.ndarray]:
    """Joint acceleration and ``B4`` acceleration for a known base acceleration."""
    if not asm.alpha > ALPHA_TOL:
        raise DegenerateInertia(f"articulated joint inertia alpha = {asm.alpha:.3g} is not positive")
    a = kin.X_b4 @ np.asarray(nudot_bc, dtype=float) + kin.c_b4
    xdd = (asm.u - float(asm.psi @ a)) / asm.alpha
    return xdd, a + np.asarray(screw) * xdd


__all__ = [
    "ParallelAssembly",
    "ParallelForward",
    "SerialAssembly",
    "SerialKinematics",
    "SerialModuleParams",
    "assemble_tip_inertia",
    "parallel_backward_pass",
    "parallel_fd",
    "parallel_fd_beta",
    "parallel_forward_pass",
    "serial_backward",
    "serial_fd",
    "serial_kinematics",
    "S_X",
]
