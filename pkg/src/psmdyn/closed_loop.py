"""
Linearly actuated four-joint closed loop.

Geometry (all in the loop plane, which is the local xy plane of every loop
frame; every revolute axis is a local z axis):

* ``O3`` is the cylinder pivot. The pivot frame sits at ``base_offset`` in
  the module base frame ``Bc``; the cylinder frame ``B3`` is that frame
  rotated by ``q1``.
* ``O1`` is the upper-link pivot, at distance ``L`` along the pivot frame's
  x axis. The upper link frame ``B1`` is rotated by ``q`` there; its x axis
  points from ``O1`` to the rod eye ``O2`` at distance ``L1``.
* The piston frame ``B4`` slides along the cylinder x axis at
  ``x + Lc0`` from ``O3``; the rod eye ``P`` is a further ``Lc`` along it,
  so ``|O3 O2| = x + x0`` with ``x0 = Lc + Lc0``.
* ``T2`` is ``P`` rotated by ``q2`` and coincides with ``T1``, the frame at
  ``L1`` along ``B1``. ``E`` is the output frame, rigid with ``B1``.

On the assembled branch used here all three passive angles are negative,
``q`` lies in ``(-pi, 0)`` and ``q = q1 + q2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import SingularConfiguration, UnreachableConfiguration
from .spatial import (
    S_X,
    S_Z,
    SpatialInertia,
    Transform,
    _adjoint_rp,
    bracket,
    bracket_dual,
)
from .tolerances import CLOSURE_TOL, DET_TOL, SINGULAR_TOL

# se*(3) -> se*(2) projector rows: fx, fy, mz
PROJ_ROWS = (0, 1, 5)


@dataclass(frozen=True, eq=False)
class ParallelModuleParams:
    """Geometric and inertial parameters of one closed-loop module.

    Attributes:
        L: pivot spacing ``|O3 O1|`` [m].
        L1: upper-link length ``|O1 O2|`` [m].
        Lc: piston-frame to rod-eye offset [m].
        Lc0: cylinder pivot to piston-frame offset at ``x = 0`` [m].
        base_offset: pose of the cylinder pivot frame (zero angle) in ``Bc``.
        tip: pose of the output frame ``E`` in ``B1``.
        b0, b1, b3, b4, e: body inertias in their own frames.
        name: free-form label.
    """

    L: float
    L1: float
    Lc: float
    Lc0: float
    base_offset: Transform = field(default_factory=Transform)
    tip: Transform = field(default_factory=Transform)
    b0: SpatialInertia = field(default_factory=SpatialInertia)
    b1: SpatialInertia = field(default_factory=SpatialInertia)
    b3: SpatialInertia = field(default_factory=SpatialInertia)
    b4: SpatialInertia = field(default_factory=SpatialInertia)
    e: SpatialInertia = field(default_factory=SpatialInertia)
    name: str = ""

    kind = "parallel"

    @property
    def x0(self) -> float:
        return self.Lc + self.Lc0

    def reachable_range(self) -> tuple[float, float]:
        """Open interval of actuator positions with a non-degenerate triangle."""
        lo = max(0.0, abs(self.L - self.L1) - self.x0)
        hi = self.L + self.L1 - self.x0
        return lo, hi

    @cached_property
    def tip_map(self) -> np.ndarray:
        """Twist map ``B1 -> E``."""
        t = self.tip
        rt = t.rotation.T
        return _adjoint_rp(rt, -rt @ t.translation)

    @cached_property
    def tip_p1_map(self) -> np.ndarray:
        """Twist map ``B1 -> T1``."""
        return _translation_x_map(self.L1)


@dataclass(frozen=True)
class ClosureState:
    """Closed-loop configuration and constraint coefficients.

    ``dk1..dk3`` are ``d k_i / d x`` along the closure manifold, so the
    time derivatives are ``dk_i * xdot`` and ``k4..k6 = dk_i * xdot**2``.
    """

    x: float
    q: float
    q1: float
    q2: float
    xdot: float
    k1: float
    k2: float
    k3: float
    dk1: float
    dk2: float
    dk3: float
    residual: float

    @property
    def k4(self) -> float:
        return self.dk1 * self.xdot * self.xdot

    @property
    def k5(self) -> float:
        return self.dk2 * self.xdot * self.xdot

    @property
    def k6(self) -> float:
        return self.dk3 * self.xdot * self.xdot

    @property
    def qdot(self) -> tuple[float, float, float]:
        """Passive joint rates ``(q', q1', q2')``."""
        xd = self.xdot
        return self.k1 * xd, self.k2 * xd, self.k3 * xd

    def passive_accelerations(self, xddot: float) -> tuple[float, float, float]:
        """``(q'', q1'', q2'')`` for a given actuator acceleration."""
        return (
            self.k4 + self.k1 * xddot,
            self.k5 + self.k2 * xddot,
            self.k6 + self.k3 * xddot,
        )


def _acos_checked(arg: float, what: str) -> float:
    if not -1.0 - 1e-12 <= arg <= 1.0 + 1e-12 or not math.isfinite(arg):
        raise UnreachableConfiguration(f"loop cannot close: arccos argument for {what} is {arg:.6g}")
    return math.acos(min(1.0, max(-1.0, arg)))


def _check_sines(q: float, q1: float, q2: float) -> None:
    for name, ang in (("q", q), ("q1", q1), ("q2", q2)):
        if abs(math.sin(ang)) < SINGULAR_TOL:
            raise SingularConfiguration(f"sin {name} = {math.sin(ang):.3g} is below {SINGULAR_TOL:g}")


def _passive_from_x(p: ParallelModuleParams, x: float) -> tuple[float, float]:
    r = x + p.x0
    L, L1 = p.L, p.L1
    q1 = -_acos_checked((L1 * L1 - r * r - L * L) / (-2.0 * r * L), "q1")
    q2 = -_acos_checked((L * L - r * r - L1 * L1) / (-2.0 * r * L1), "q2")
    return q1, q2


def closure_residual(p: ParallelModuleParams, x: float, q: float, q1: float, q2: float) -> float:
    """Largest violation of the three closure equations and the angle sum."""
    r = x + p.x0
    L, L1 = p.L, p.L1
    res_x = x - (math.sqrt(L * L + L1 * L1 + 2.0 * L * L1 * math.cos(q)) - p.x0)
    # cosine forms avoid arccos amplification near the branch ends
    res_1 = math.cos(q1) - (r * r + L * L - L1 * L1) / (2.0 * r * L)
    res_2 = math.cos(q2) - (r * r + L1 * L1 - L * L) / (2.0 * r * L1)
    res_s = q - q1 - q2
    return max(abs(res_x), abs(res_1), abs(res_2), abs(res_s))


def _coefficients(p: ParallelModuleParams, x: float, q: float, q1: float, q2: float):
    r = x + p.x0
    L, L1 = p.L, p.L1
    sq, cq = math.sin(q), math.cos(q)
    s1, c1 = math.sin(q1), math.cos(q1)
    s2, c2 = math.sin(q2), math.cos(q2)

    k1 = -r / (L * L1 * sq)
    n2 = r - L * c1
    d2 = r * L * s1
    k2 = -n2 / d2
    n3 = r - L1 * c2
    d3 = r * L1 * s2
    k3 = -n3 / d3

    # total derivatives w.r.t. x, with q' = k1 x', q1' = k2 x', q2' = k3 x'
    dk1 = -(sq - r * cq * k1) / (L * L1 * sq * sq)
    dn2 = 1.0 + L * s1 * k2
    dd2 = L * (s1 + r * c1 * k2)
    dk2 = -(dn2 * d2 - n2 * dd2) / (d2 * d2)
    dn3 = 1.0 + L1 * s2 * k3
    dd3 = L1 * (s2 + r * c2 * k3)
    dk3 = -(dn3 * d3 - n3 * dd3) / (d3 * d3)
    return k1, k2, k3, dk1, dk2, dk3


def solve_closure_from_x(p: ParallelModuleParams, x: float, xdot: float = 0.0) -> ClosureState:
    """Close the loop for a given actuator position.

    Raises:
        UnreachableConfiguration: ``x < 0`` or the triangle cannot close.
        SingularConfiguration: a passive-joint sine is below ``SINGULAR_TOL``.
    """
    x = float(x)
    if x < 0.0:
        raise UnreachableConfiguration(f"actuator position x = {x:.6g} is negative")
    r = x + p.x0
    L, L1 = p.L, p.L1
    q = -_acos_checked((r * r - L * L - L1 * L1) / (2.0 * L * L1), "q")
    q1, q2 = _passive_from_x(p, x)
    _check_sines(q, q1, q2)
    k = _coefficients(p, x, q, q1, q2)
    res = closure_residual(p, x, q, q1, q2)
    if res > CLOSURE_TOL:
        raise SingularConfiguration(f"ill-conditioned closure: residual {res:.3g} exceeds {CLOSURE_TOL:g}")
    return ClosureState(x, q, q1, q2, float(xdot), *k, res)


def solve_closure(p: ParallelModuleParams, q: float, qdot: float | None = None) -> ClosureState:
    """Close the loop for a given upper-link angle ``q`` in ``(-pi, 0)``.

    ``qdot``, if given, sets the actuator rate through ``xdot = qdot / k1``.
    """
    q = float(q)
    if not -math.pi < q < 0.0:
        raise UnreachableConfiguration(f"q = {q:.6g} is outside the assembled branch (-pi, 0)")
    L, L1 = p.L, p.L1
    x = math.sqrt(L * L + L1 * L1 + 2.0 * L * L1 * math.cos(q)) - p.x0
    if x < 0.0:
        raise UnreachableConfiguration(f"q = {q:.6g} needs a negative actuator position x = {x:.6g}")
    q1, q2 = _passive_from_x(p, x)
    _check_sines(q, q1, q2)
    k = _coefficients(p, x, q, q1, q2)
    xdot = 0.0 if qdot is None else float(qdot) / k[0]
    res = closure_residual(p, x, q, q1, q2)
    if res > CLOSURE_TOL:
        raise SingularConfiguration(f"ill-conditioned closure: residual {res:.3g} exceeds {CLOSURE_TOL:g}")
    return ClosureState(x, q, q1, q2, xdot, *k, res)


def constraint_coefficients(p: ParallelModuleParams, state: ClosureState) -> tuple[float, ...]:
    """Return ``(k1, k2, k3, k4, k5, k6)`` for a closure state."""
    _check_sines(state.q, state.q1, state.q2)
    k1, k2, k3, dk1, dk2, dk3 = _coefficients(p, state.x, state.q, state.q1, state.q2)
    xd2 = state.xdot * state.xdot
    return k1, k2, k3, dk1 * xd2, dk2 * xd2, dk3 * xd2


# ---------------------------------------------------------------------------
# kinematics


def _rz(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _translation_x_map(d: float) -> np.ndarray:
    """Twist map from a frame to the frame translated by ``d`` along x."""
    x = np.eye(6)
    # Ad of the inverse pose (I, -d e_x): upper-right block is skew(-d e_x)
    x[1, 5] = d
    x[2, 4] = -d
    return x


def _ad_inv_rp(r: np.ndarray, p: np.ndarray) -> np.ndarray:
    rt = r.T
    return _adjoint_rp(rt, -rt @ p)


@dataclass
class LoopKinematics:
    """Velocity-level kinematics of one loop.

    ``X_*`` are 6x6 twist maps from the named parent to the child frame
    (``X_b1``: ``Bc -> B1`` and so on). ``R_*``/``p_*`` are poses in ``Bc``.
    ``c_*`` are acceleration biases, ``p_*`` wrench biases.
    """

    X_b1: np.ndarray
    X_b3: np.ndarray
    X_b4b3: np.ndarray
    X_b4: np.ndarray
    X_e: np.ndarray
    X_t2b4: np.ndarray
    R_b1: np.ndarray
    p_b1: np.ndarray
    R_b3: np.ndarray
    p_b3: np.ndarray
    p_b4: np.ndarray
    nu_bc: np.ndarray
    nu_b1: np.ndarray
    nu_b3: np.ndarray
    nu_b4: np.ndarray
    nu_e: np.ndarray
    c_b1: np.ndarray
    c_b3: np.ndarray
    c_b4: np.ndarray
    bias_b0: np.ndarray
    bias_b1: np.ndarray
    bias_b3: np.ndarray
    bias_b4: np.ndarray
    bias_e: np.ndarray

    def tip_twists(self, p: ParallelModuleParams, state: ClosureState) -> tuple[np.ndarray, np.ndarray]:
        """Twist of ``Tc`` through the upper chain and through the lower chain."""
        upper = p.tip_p1_map @ self.nu_b1
        lower = self.X_t2b4 @ self.nu_b4 + S_Z * (state.k3 * state.xdot)
        return upper, lower

    def pose(self, p: ParallelModuleParams, state: ClosureState, frame: str) -> Transform:
        """Pose of ``B1``, ``B3``, ``B4``, ``E``, ``T1`` or ``T2`` in ``Bc``."""
        if frame == "B1":
            return Transform(self.R_b1, self.p_b1)
        if frame == "B3":
            return Transform(self.R_b3, self.p_b3)
        if frame == "B4":
            return Transform(self.R_b3, self.p_b4)
        if frame == "E":
            return Transform(self.R_b1, self.p_b1).compose(p.tip)
        if frame == "T1":
            return Transform(self.R_b1, self.p_b1 + self.R_b1[:, 0] * p.L1)
        if frame == "T2":
            return Transform(self.R_b3 @ _rz(state.q2), self.p_b4 + self.R_b3[:, 0] * p.Lc)
        raise KeyError(frame)


def _bias_wrench(m: SpatialInertia, nu: np.ndarray) -> np.ndarray:
    return -bracket_dual(nu, m.matrix @ nu)


def loop_kinematics(p: ParallelModuleParams, state: ClosureState, nu_bc) -> LoopKinematics:
    """Twists, acceleration biases and wrench biases of every loop body."""
    nu_bc = np.asarray(nu_bc, dtype=float)
    rb = p.base_offset.rotation
    pb = p.base_offset.translation

    r_b3 = rb @ _rz(state.q1)
    r_b1 = rb @ _rz(state.q)
    p_b1 = pb + rb[:, 0] * p.L
    ka = state.x + p.Lc0
    p_b4 = pb + r_b3[:, 0] * ka

    x_b1 = _ad_inv_rp(r_b1, p_b1)
    x_b3 = _ad_inv_rp(r_b3, pb)
    x_b4b3 = _translation_x_map(ka)
    x_b4 = _ad_inv_rp(r_b3, p_b4)
    x_e = p.tip_map
    # B4 -> P (translate Lc) -> T2 (rotate q2)
    x_t2b4 = _ad_inv_rp(_rz(state.q2), np.array([p.Lc, 0.0, 0.0]))

    qd, q1d, _ = state.qdot
    xd = state.xdot
    nu_b1 = x_b1 @ nu_bc
    nu_b1[5] += qd
    nu_b3 = x_b3 @ nu_bc
    nu_b3[5] += q1d
    nu_b4 = x_b4b3 @ nu_b3
    nu_b4[0] += xd
    nu_e = x_e @ nu_b1

    c_b1 = bracket(nu_b1, S_Z * qd)
    c_b3 = bracket(nu_b3, S_Z * q1d)
    c_b4 = bracket(nu_b4, S_X * xd)

    return LoopKinematics(
        X_b1=x_b1,
        X_b3=x_b3,
        X_b4b3=x_b4b3,
        X_b4=x_b4,
        X_e=x_e,
        X_t2b4=x_t2b4,
        R_b1=r_b1,
        p_b1=p_b1,
        R_b3=r_b3,
        p_b3=pb,
        p_b4=p_b4,
        nu_bc=nu_bc,
        nu_b1=nu_b1,
        nu_b3=nu_b3,
        nu_b4=nu_b4,
        nu_e=nu_e,
        c_b1=c_b1,
        c_b3=c_b3,
        c_b4=c_b4,
        bias_b0=_bias_wrench(p.b0, nu_bc),
        bias_b1=_bias_wrench(p.b1, nu_b1),
        bias_b3=_bias_wrench(p.b3, nu_b3),
        bias_b4=_bias_wrench(p.b4, nu_b4),
        bias_e=_bias_wrench(p.e, nu_e),
    )


@dataclass
class LoopAccelerations:
    nudot_bc: np.ndarray
    nudot_b1: np.ndarray
    nudot_b3: np.ndarray
    nudot_b4: np.ndarray
    nudot_e: np.ndarray
    xddot: float


def loop_accelerations(state: ClosureState, kin: LoopKinematics, nudot_bc, xddot: float) -> LoopAccelerations:
    """Body accelerations for a known base acceleration and actuator acceleration."""
    nudot_bc = np.asarray(nudot_bc, dtype=float)
    qdd, q1dd, _ = state.passive_accelerations(xddot)
    a_b1 = kin.X_b1 @ nudot_bc + kin.c_b1
    a_b1[5] += qdd
    a_b3 = kin.X_b3 @ nudot_bc + kin.c_b3
    a_b3[5] += q1dd
    a_b4 = kin.X_b4b3 @ a_b3 + kin.c_b4
    a_b4[0] += xddot
    a_e = kin.X_e @ a_b1
    return LoopAccelerations(nudot_bc, a_b1, a_b3, a_b4, a_e, float(xddot))


@dataclass
class LoopWrenches:
    """Local body wrenches (``hat``), the tip wrench and the lumped upper-link wrench."""

    b0: np.ndarray
    b1: np.ndarray
    b3: np.ndarray
    b4: np.ndarray
    e: np.ndarray
    b1_tilde: np.ndarray


def local_wrenches(p: ParallelModuleParams, kin: LoopKinematics, acc: LoopAccelerations, f_ext=None) -> LoopWrenches:
    """Body wrenches ``M nudot + bias``; ``f_ext`` acts at ``E`` in ``E`` coordinates."""
    w_b0 = p.b0.matrix @ acc.nudot_bc + kin.bias_b0
    w_b1 = p.b1.matrix @ acc.nudot_b1 + kin.bias_b1
    w_b3 = p.b3.matrix @ acc.nudot_b3 + kin.bias_b3
    w_b4 = p.b4.matrix @ acc.nudot_b4 + kin.bias_b4
    w_e = p.e.matrix @ acc.nudot_e + kin.bias_e
    if f_ext is not None:
        w_e = w_e + np.asarray(f_ext, dtype=float)
    return LoopWrenches(w_b0, w_b1, w_b3, w_b4, w_e, w_b1 + kin.X_e.T @ w_e)


def base_wrench_direct(kin: LoopKinematics, w: LoopWrenches) -> np.ndarray:
    """Total wrench at ``Bc`` as the transported sum of the local wrenches."""
    return w.b0 + kin.X_b1.T @ w.b1_tilde + kin.X_b3.T @ w.b3 + kin.X_b4.T @ w.b4


# ---------------------------------------------------------------------------
# analytic actuator force


def cramer_matrix(p: ParallelModuleParams, state: ClosureState) -> np.ndarray:
    """The 7x7 matrix of the loop's internal-force system.

    Unknown order: ``f_P^x, f_P^y, f_B4^x, f_B4^y, m_B4^z, f_B3^x, f_B3^y``.
    """
    s2, c2 = math.sin(state.q2), math.cos(state.q2)
    L1 = p.L1
    a = np.zeros((7, 7))
    a[0, 0] = -L1 * s2
    a[0, 1] = L1 * c2
    a[1, 0] = 1.0
    a[1, 2] = -1.0
    a[2, 1] = 1.0
    a[2, 3] = -1.0
    a[3, 1] = p.Lc
    a[3, 4] = -1.0
    a[4, 3] = state.x + p.Lc0
    a[4, 4] = 1.0
    a[5, 2] = 1.0
    a[5, 5] = -1.0
    a[6, 3] = 1.0
    a[6, 6] = -1.0
    return a


def cramer_det(p: ParallelModuleParams, state: ClosureState) -> float:
    """Closed-form determinant of :func:`cramer_matrix`."""
    return -p.L1 * math.sin(state.q2) * (state.x + p.x0)


def cramer_rhs(w: LoopWrenches) -> np.ndarray:
    """Right-hand side built from the local wrenches."""
    return np.array(
        [
            w.b1_tilde[5],
            -w.b4[0],
            -w.b4[1],
            -w.b4[5],
            -w.b3[5],
            w.b3[0],
            w.b3[1],
        ]
    )


def commutation_matrix() -> np.ndarray:
    """7x9 matrix mapping stacked projected wrenches to :func:`cramer_rhs`.

    Column order: ``(fx, fy, mz)`` of the lumped upper-link wrench, then of
    ``B3``, then of ``B4``.
    """
    c = np.zeros((7, 9))
    c[0, 2] = 1.0
    c[1, 6] = -1.0
    c[2, 7] = -1.0
    c[3, 8] = -1.0
    c[4, 5] = -1.0
    c[5, 3] = 1.0
    c[6, 4] = 1.0
    return c


def actuator_force_cramer(p: ParallelModuleParams, state: ClosureState, w: LoopWrenches) -> float:
    """Actuator force ``f_B4^x = det(A_psi) / det(A)``.

    Raises:
        SingularConfiguration: if ``|det A|`` is below ``DET_TOL``.
    """
    a = cramer_matrix(p, state)
    det_a = np.linalg.det(a)
    if abs(det_a) < DET_TOL:
        raise SingularConfiguration(f"|det A| = {abs(det_a):.3g} is below {DET_TOL:g}")
    a_psi = a.copy()
    a_psi[:, 2] = cramer_rhs(w)
    return float(np.linalg.det(a_psi) / det_a)


def inverse_dynamics_cramer(
    p: ParallelModuleParams,
    state: ClosureState,
    nu_bc,
    nudot_bc,
    xddot: float,
    f_ext=None,
) -> float:
    """Actuator force of a single loop for a prescribed motion."""
    kin = loop_kinematics(p, state, nu_bc)
    acc = loop_accelerations(state, kin, nudot_bc, xddot)
    return actuator_force_cramer(p, state, local_wrenches(p, kin, acc, f_ext))


# ---------------------------------------------------------------------------
# projected actuator-wrench maps


@dataclass(frozen=True)
class KMatrices:
    """Maps from projected local wrenches to the actuator wrench.

    ``kbar`` is the 3x9 block ``[K1bar K3bar K4bar]``; ``K1``, ``K3``,
    ``K4`` are the same blocks lifted to 6x6.
    """

    K1: np.ndarray
    K3: np.ndarray
    K4: np.ndarray
    kbar: np.ndarray
    ka: float
    kb: float
    kc: float
    kd: float
    ke: float
    kf: float
    kg: float


def _lift(block: np.ndarray) -> np.ndarray:
    k = np.zeros((6, 6))
    k[np.ix_(PROJ_ROWS, PROJ_ROWS)] = block
    return k


def k_matrices(p: ParallelModuleParams, state: ClosureState) -> KMatrices:
    """Closed-form actuator-wrench maps.

    Raises:
        SingularConfiguration: if ``sin q2`` or ``x + x0`` vanish.
    """
    if abs(math.sin(state.q2)) < SINGULAR_TOL:
        raise SingularConfiguration(f"sin q2 = {math.sin(state.q2):.3g} is below {SINGULAR_TOL:g}")
    ka = state.x + p.Lc0
    kb = -p.L1 * math.sin(state.q2)
    kc = p.L1 * math.cos(state.q2)
    ke = ka + p.Lc
    if ke <= 0.0:
        raise SingularConfiguration("x + x0 must be positive")
    kd = kb * ke
    kf = kc / kd
    kg = p.Lc / ke
    kbar = np.array(
        [
            [0.0, 0.0, 1.0 / kb, 0.0, 0.0, kf, 1.0, ka * kf, kf],
            [0.0, 0.0, 0.0, 0.0, 0.0, -1.0 / ke, 0.0, kg, -1.0 / ke],
            [0.0, 0.0, 0.0, 0.0, 0.0, -kg, 0.0, -ka * kg, ka / ke],
        ]
    )
    return KMatrices(
        K1=_lift(kbar[:, 0:3]),
        K3=_lift(kbar[:, 3:6]),
        K4=_lift(kbar[:, 6:9]),
        kbar=kbar,
        ka=ka,
        kb=kb,
        kc=kc,
        kd=kd,
        ke=ke,
        kf=kf,
        kg=kg,
    )


def actuator_wrench(kmat: KMatrices, w_b1_tilde, w_b3, w_b4) -> np.ndarray:
    """Total actuator wrench ``K1 F~_B1 + K3 F^_B3 + K4 F^_B4``."""
    return kmat.K1 @ w_b1_tilde + kmat.K3 @ w_b3 + kmat.K4 @ w_b4
