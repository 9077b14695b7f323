"""
Six-dimensional spatial algebra on SE(3), se(3) and se*(3).

Ordering convention (used everywhere in the package):

* motion vectors (twists, accelerations, screws) are ``[v; w]``: linear part
  first, angular part last, so ``S_X = [1 0 0 0 0 0]`` is a prismatic joint
  along local x and ``S_Z = [0 0 0 0 0 1]`` a revolute joint about local z;
* force vectors (wrenches, momenta) are ``[f; m]``, so the power pairing
  ``<F, nu>`` is the plain dot product.

A :class:`Transform` ``T`` holds the pose of a child frame in its parent
frame. ``adjoint(T)`` maps twists written in child coordinates to parent
coordinates; ``adjoint(T.inverse())`` does the opposite, which is the map
used by the forward recursions. ``adjoint_dual(T)`` is the transpose of
``adjoint(T)`` and carries wrenches the other way, preserving power.

Vectors are plain ``numpy`` arrays of shape ``(6,)``; operators are dense
``(6, 6)`` arrays.
"""

from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelDefinitionError
from .tolerances import ORTHO_TOL, SCREW_TOL

S_X = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
S_Z = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])

_EYE3 = np.eye(3)


def skew(v) -> np.ndarray:
    """Return the 3x3 matrix ``[v]`` with ``[v] @ u == cross(v, u)``."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


# ---------------------------------------------------------------------------
# operation counting (used to check linear scaling of the recursions)

_COUNTER: contextvars.ContextVar[list | None] = contextvars.ContextVar("_COUNTER", default=None)


@contextlib.contextmanager
def count_products():
    """Count 6x6-by-6x6 matrix products issued through :func:`mm6`.

    Yields a one-element list whose entry is the running count.
    """
    box = [0]
    token = _COUNTER.set(box)
    try:
        yield box
    finally:
        _COUNTER.reset(token)


def mm6(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense 6x6 matrix product, counted when a counter is active."""
    box = _COUNTER.get()
    if box is not None:
        box[0] += 1
    return a @ b


# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True, eq=False)
class Transform:
    """Rigid transform (element of SE(3)).

    ``rotation`` and ``translation`` give the pose of the child frame in
    the parent frame: ``point_parent = rotation @ point_child + translation``.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        r = np.array(self.rotation, dtype=float).reshape(3, 3)
        p = np.array(self.translation, dtype=float).reshape(3)
        r.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", p)

    @classmethod
    def identity(cls) -> Transform:
        return cls()

    @classmethod
    def from_matrix(cls, h) -> Transform:
        h = np.asarray(h, dtype=float)
        return cls(h[:3, :3], h[:3, 3])

    @classmethod
    def from_translation(cls, p) -> Transform:
        return cls(np.eye(3), p)

    @classmethod
    def rot_z(cls, angle: float) -> Transform:
        c, s = np.cos(angle), np.sin(angle)
        return cls(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))

    @property
    def matrix(self) -> np.ndarray:
        h = np.eye(4)
        h[:3, :3] = self.rotation
        h[:3, 3] = self.translation
        return h

    def compose(self, other: Transform) -> Transform:
        """Return ``self * other`` (apply ``other`` first, then ``self``)."""
        r = self.rotation
        return Transform(r @ other.rotation, r @ other.translation + self.translation)

    __matmul__ = compose

    def inverse(self) -> Transform:
        rt = self.rotation.T
        return Transform(rt, -rt @ self.translation)

    def apply(self, point) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation

    def is_valid(self, tol: float = ORTHO_TOL) -> bool:
        r = self.rotation
        return bool(
            np.all(np.isfinite(r))
            and np.all(np.isfinite(self.translation))
            and np.max(np.abs(r.T @ r - _EYE3)) <= tol
            and abs(np.linalg.det(r) - 1.0) <= tol
        )

    def allclose(self, other: Transform, atol: float = ORTHO_TOL) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )


def orthonormalize(r) -> np.ndarray:
    """Project a near-rotation matrix onto SO(3) (polar decomposition)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    q = u @ vt
    if np.linalg.det(q) < 0:
        u[:, -1] *= -1.0
        q = u @ vt
    return q


def _adjoint_rp(r: np.ndarray, p: np.ndarray) -> np.ndarray:
    ad = np.zeros((6, 6))
    ad[:3, :3] = r
    ad[3:, 3:] = r
    ad[:3, 3:] = skew(p) @ r
    return ad


def adjoint(t: Transform) -> np.ndarray:
    """Adjoint ``Ad_T``: twist in child coordinates -> twist in parent coordinates."""
    return _adjoint_rp(t.rotation, t.translation)


def adjoint_inv(t: Transform) -> np.ndarray:
    """``Ad_{T^-1}``, the parent-to-child twist map used by the forward passes."""
    rt = t.rotation.T
    return _adjoint_rp(rt, -rt @ t.translation)


def adjoint_dual(t: Transform) -> np.ndarray:
    """Dual adjoint ``Ad*_T = Ad_T^T``.

    Satisfies ``<Ad*_T F, nu> = <F, Ad_T nu>``: it carries a wrench written
    in parent coordinates back to child coordinates, so that with
    ``G = T^-1`` it carries child wrenches to the parent.
    """
    return adjoint(t).T


def lie_bracket(nu) -> np.ndarray:
    """Matrix of ``ad_nu`` so that ``lie_bracket(nu) @ w == [nu, w]``."""
    v = nu[:3]
    w = nu[3:]
    ad = np.zeros((6, 6))
    ad[:3, :3] = skew(w)
    ad[:3, 3:] = skew(v)
    ad[3:, 3:] = ad[:3, :3]
    return ad


def lie_bracket_dual(nu) -> np.ndarray:
    """``ad*_nu = ad_nu^T`` (power-pairing dual of :func:`lie_bracket`).

    The Featherstone force cross product ``nu x*`` equals ``-ad*_nu``.
    """
    return lie_bracket(nu).T


def bracket(nu, w) -> np.ndarray:
    """``ad_nu w`` without forming the matrix."""
    v0, v1, v2, o0, o1, o2 = nu.tolist()
    a0, a1, a2, b0, b1, b2 = w.tolist()
    # [w x a + v x b; w x b]
    return np.array(
        [
            o1 * a2 - o2 * a1 + v1 * b2 - v2 * b1,
            o2 * a0 - o0 * a2 + v2 * b0 - v0 * b2,
            o0 * a1 - o1 * a0 + v0 * b1 - v1 * b0,
            o1 * b2 - o2 * b1,
            o2 * b0 - o0 * b2,
            o0 * b1 - o1 * b0,
        ]
    )


def bracket_dual(nu, f) -> np.ndarray:
    """``ad*_nu F`` without forming the matrix."""
    v0, v1, v2, o0, o1, o2 = nu.tolist()
    f0, f1, f2, m0, m1, m2 = f.tolist()
    # transpose of [[w x, v x], [0, w x]] applied to [f; m]
    return np.array(
        [
            o2 * f1 - o1 * f2,
            o0 * f2 - o2 * f0,
            o1 * f0 - o0 * f1,
            v2 * f1 - v1 * f2 + o2 * m1 - o1 * m2,
            v0 * f2 - v2 * f0 + o0 * m2 - o2 * m0,
            v1 * f0 - v0 * f1 + o1 * m0 - o0 * m1,
        ]
    )


def check_unit_screw(s, tol: float = SCREW_TOL) -> np.ndarray:
    """Validate a unit screw and return it as a float array."""
    s = np.asarray(s, dtype=float).reshape(6)
    w = s[3:]
    nw = np.linalg.norm(w)
    if not np.all(np.isfinite(s)):
        raise ModelDefinitionError("screw has non-finite entries")
    if abs(nw - 1.0) <= tol:
        return s
    if nw <= tol and abs(np.linalg.norm(s[:3]) - 1.0) <= tol:
        return s
    raise ModelDefinitionError(
        f"screw {s.tolist()} is not unit: need |angular| = 1, or angular = 0 and |linear| = 1"
    )


def exp_screw(s, q: float) -> Transform:
    """Exponential ``e^{[s] q}`` of a unit screw.

    For a revolute screw the angular part is a unit axis; for a prismatic
    screw the angular part is zero and the linear part is a unit direction.

    Raises:
        ModelDefinitionError: if ``s`` is not a unit screw.
    """
    s = check_unit_screw(s)
    v = s[:3]
    w = s[3:]
    if not np.any(w):
        return Transform(np.eye(3), v * q)
    k = skew(w)
    sq, cq = np.sin(q), np.cos(q)
    k2 = k @ k
    r = _EYE3 + sq * k + (1.0 - cq) * k2
    p = (q * _EYE3 + (1.0 - cq) * k + (q - sq) * k2) @ v
    return Transform(r, p)


# ---------------------------------------------------------------------------
# inertia


@dataclass(frozen=True, eq=False)
class SpatialInertia:
    """Rigid-body inertia written in a body frame.

    Attributes:
        mass: kilograms, > 0 for a physical body (0 allowed for massless
            placeholders).
        com: centre of mass in body coordinates [m].
        inertia_com: 3x3 rotational inertia about the centre of mass,
            body axes [kg m^2].
    """

    mass: float = 0.0
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia_com: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        c = np.array(self.com, dtype=float).reshape(3)
        i = np.array(self.inertia_com, dtype=float).reshape(3, 3)
        m = float(self.mass)
        cx = skew(c)
        mat = np.zeros((6, 6))
        mat[:3, :3] = m * _EYE3
        mat[:3, 3:] = -m * cx
        mat[3:, :3] = m * cx
        mat[3:, 3:] = i - m * cx @ cx
        for a in (c, i, mat):
            a.setflags(write=False)
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "com", c)
        object.__setattr__(self, "inertia_com", i)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def zero(cls) -> SpatialInertia:
        return cls()

    @property
    def inertia_origin(self) -> np.ndarray:
        """Rotational inertia about the frame origin."""
        return self.matrix[3:, 3:].copy()

    def is_zero(self) -> bool:
        return self.mass == 0.0 and not np.any(self.inertia_com)


def transform_inertia(m, t: Transform) -> np.ndarray:
    """Re-express a 6x6 inertia given in a child frame in the parent frame.

    ``T`` is the child pose in the parent. The result is
    ``Ad_{T^-1}^T M Ad_{T^-1}``, so kinetic energy is frame independent:
    ``nu^T M nu == (Ad_T nu)^T M' (Ad_T nu)``.
    """
    mat = m.matrix if isinstance(m, SpatialInertia) else np.asarray(m, dtype=float)
    x = adjoint_inv(t)
    return mm6(x.T, mm6(mat, x))


def congruence(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``X^T M X`` with counted products."""
    return mm6(x.T, mm6(m, x))
