"""
Trajectory drivers: batch ID/FD, fixed-step time integration and the
validation suite.
"""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly import parallel_fd_beta, parallel_backward_pass, parallel_forward_pass
from .closed_loop import (
    ParallelModuleParams,
    actuator_force_cramer,
    actuator_wrench,
    base_wrench_direct,
    k_matrices,
    local_wrenches,
    loop_accelerations,
    loop_kinematics,
    solve_closure_from_x,
)
from .errors import ConfigurationError
from .model_io import Trajectory, default_sinusoid, generate_sinusoid_trajectory
from .solver import (
    ActuatorState,
    ManipulatorModel,
    forward_dynamics,
    identical_chain,
    inverse_dynamics,
    mass_matrix_oracle,
    mechanical_energy,
)
from .spatial import count_products

INTEGRATORS = ("rk4", "semieuler")


def _tag_sample(exc: ConfigurationError, i: int) -> ConfigurationError:
    exc.sample = i
    return exc


def run_inverse_dynamics(model: ManipulatorModel, traj: Trajectory) -> Trajectory:
    """Actuator forces for every sample of an acceleration trajectory."""
    out = np.empty_like(traj.x)
    xdd = traj.xddot
    for i in range(traj.samples):
        try:
            out[i] = inverse_dynamics(model, ActuatorState(traj.x[i], traj.xdot[i]), xdd[i])
        except ConfigurationError as exc:
            raise _tag_sample(exc, i)
    return traj.with_third(out, "f")


def run_forward_dynamics(model: ManipulatorModel, traj: Trajectory) -> Trajectory:
    """Actuator accelerations for every sample of a force trajectory."""
    out = np.empty_like(traj.x)
    f = traj.f
    for i in range(traj.samples):
        try:
            out[i] = forward_dynamics(model, ActuatorState(traj.x[i], traj.xdot[i], f[i])).xddot
        except ConfigurationError as exc:
            raise _tag_sample(exc, i)
    return traj.with_third(out, "xddot")


# ---------------------------------------------------------------------------
# time integration


@dataclass(frozen=True)
class SimulationConfig:
    integrator: str = "rk4"
    step: float = 1e-3
    duration: float = 1.0
    decimation: int = 1

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.duration >= self.step:
            raise ValueError("duration must be at least one step")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.step))


@dataclass
class SimulationResult:
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    xddot: np.ndarray
    kinetic: np.ndarray
    potential: np.ndarray

    @property
    def energy(self) -> np.ndarray:
        return self.kinetic + self.potential

    def energy_drift(self) -> float:
        """Largest absolute deviation of the total energy from its start value."""
        e = self.energy
        return float(np.max(np.abs(e - e[0])))

    def relative_drift(self) -> float:
        """Energy drift divided by the peak kinetic energy.

        The potential has an arbitrary zero, so dividing by the total energy
        could hide drift behind a large constant; the peak kinetic energy is
        the energy actually exchanged during the motion.
        """
        scale = float(np.max(self.kinetic))
        if scale <= 0.0:
            return 0.0 if self.energy_drift() == 0.0 else math.inf
        return self.energy_drift() / scale


def _forces(schedule, t, n):
    if schedule is None:
        return np.zeros(n)
    if callable(schedule):
        return np.asarray(schedule(t), dtype=float)
    return np.asarray(schedule, dtype=float)


def simulate(
    model: ManipulatorModel,
    x0,
    xdot0,
    config: SimulationConfig,
    forces=None,
    energy: bool = True,
) -> SimulationResult:
    """Integrate the forward dynamics with a fixed step.

    Args:
        forces: ``None`` (unforced), a constant vector, or ``f(t)``.

    Raises:
        ConfigurationError: with ``sample`` set to the step where the
            motion reached a singular or unreachable configuration.
    """
    n = model.n
    x = np.array(x0, dtype=float).reshape(n)
    v = np.array(xdot0, dtype=float).reshape(n)
    h = config.step
    steps = config.steps
    dec = config.decimation
    rows = steps // dec + 1
    ts = np.empty(rows)
    xs = np.empty((rows, n))
    vs = np.empty((rows, n))
    accs = np.empty((rows, n))
    kin = np.full(rows, np.nan)
    pot = np.full(rows, np.nan)

    def acc(t, xx, vv):
        return forward_dynamics(model, ActuatorState(xx, vv, _forces(forces, t, n))).xddot

    t = 0.0
    r = 0
    for k in range(steps + 1):
        try:
            a = acc(t, x, v)
            if k % dec == 0:
                ts[r], xs[r], vs[r], accs[r] = t, x, v, a
                if energy:
                    kin[r], pot[r] = mechanical_energy(model, x, v)
                r += 1
            if k == steps:
                break
            if config.integrator == "rk4":
                k1x, k1v = v, a
                k2x = v + 0.5 * h * k1v
                k2v = acc(t + 0.5 * h, x + 0.5 * h * k1x, k2x)
                k3x = v + 0.5 * h * k2v
                k3v = acc(t + 0.5 * h, x + 0.5 * h * k2x, k3x)
                k4x = v + h * k3v
                k4v = acc(t + h, x + h * k3x, k4x)
                x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            else:
                v = v + h * a
                x = x + h * v
            t = (k + 1) * h
        except ConfigurationError as exc:
            raise _tag_sample(exc, k)
    return SimulationResult(ts[:r], xs[:r], vs[:r], accs[:r], kin[:r], pot[:r])


# ---------------------------------------------------------------------------
# validation


@dataclass
class CheckResult:
    name: str
    max_abs: float
    mean_abs: float
    rel_pct: float
    threshold: float
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    model: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_records(self) -> list[dict]:
        return [asdict(c) for c in self.checks]

    def to_text(self) -> str:
        lines = [f"validation of {self.model}"]
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(
                f"  [{tag}] {c.name:<26} max {c.max_abs:.3e}  mean {c.mean_abs:.3e}  "
                f"rel {c.rel_pct:.3e}%  (threshold {c.threshold:.1e}) {c.detail}".rstrip()
            )
        lines.append("all checks passed" if self.passed else "some checks FAILED")
        return "\n".join(lines)


def _summary(name, errors, scale, threshold, use_mean=False, detail="") -> CheckResult:
    errors = np.asarray(errors, dtype=float)
    mx = float(np.max(errors)) if errors.size else 0.0
    mean = float(np.mean(errors)) if errors.size else 0.0
    scale = float(np.mean(scale)) if np.size(scale) else 0.0
    rel = 100.0 * mean / scale if scale > 0 else 0.0
    stat = mean if use_mean else mx
    ok = bool(np.isfinite(stat) and stat <= threshold)
    return CheckResult(name, mx, mean, rel, threshold, ok, detail)


def round_trip_errors(model: ManipulatorModel, traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample summed ``|FD(ID(xddot)) - xddot|`` and the per-sample ``sum |xddot|``."""
    xdd = traj.xddot
    err = np.empty(traj.samples)
    for i in range(traj.samples):
        st = ActuatorState(traj.x[i], traj.xdot[i])
        f = inverse_dynamics(model, st, xdd[i])
        out = forward_dynamics(model, ActuatorState(traj.x[i], traj.xdot[i], f)).xddot
        err[i] = float(np.sum(np.abs(out - xdd[i])))
    return err, np.sum(np.abs(xdd), axis=1)


def random_states(model: ManipulatorModel, count: int, rng: np.random.Generator, margin: float = 0.05):
    """Random positions, rates and forces inside every actuator range."""
    n = model.n
    xs, vs = [], []
    while len(xs) < count:
        x = np.empty(n)
        for k, mod in enumerate(model.modules):
            if isinstance(mod, ParallelModuleParams):
                lo, hi = mod.reachable_range()
            else:
                lo, hi = mod.limits if mod.limits is not None else (-1.0, 1.0)
            w = hi - lo
            x[k] = rng.uniform(lo + margin * w, hi - margin * w)
        try:
            for k, mod in enumerate(model.modules):
                if isinstance(mod, ParallelModuleParams):
                    solve_closure_from_x(mod, x[k])
        except ConfigurationError:
            continue
        xs.append(x)
        vs.append(rng.normal(scale=0.5, size=n))
    return np.array(xs), np.array(vs)


def _parallel_samples(model, rng, count):
    """Yield ``(params, closure, nu_bc, nudot_bc, xddot, f_ext)`` on the model's loops."""
    loops = [m for m in model.modules if isinstance(m, ParallelModuleParams)]
    for i in range(count):
        p = loops[i % len(loops)]
        lo, hi = p.reachable_range()
        w = hi - lo
        cs = solve_closure_from_x(p, rng.uniform(lo + 0.05 * w, hi - 0.05 * w), rng.normal())
        yield p, cs, rng.normal(size=6), rng.normal(size=6) * 5.0, rng.normal(), rng.normal(size=6) * 100.0


def check_force_equivalence(model, rng, count=1000) -> CheckResult:
    """Cramer actuator force vs the K-matrix actuator wrench."""
    errs, scale = [], []
    for p, cs, nu, nud, xdd, fe in _parallel_samples(model, rng, count):
        kin = loop_kinematics(p, cs, nu)
        w = local_wrenches(p, kin, loop_accelerations(cs, kin, nud, xdd), fe)
        f_a = actuator_force_cramer(p, cs, w)
        f_b = actuator_wrench(k_matrices(p, cs), w.b1_tilde, w.b3, w.b4)[0]
        errs.append(abs(f_a - f_b) / max(1.0, abs(f_a)))
        scale.append(1.0)
    return _summary("cramer_vs_kmatrix", errs, scale, 1e-10, detail="relative to max(1, |f|)")


def check_fd_forms(model, rng, count=1000) -> CheckResult:
    """Scalar law with ``beta`` vs the base-acceleration-linear law."""
    errs, scale = [], []
    for p, cs, nu, nud, _, fe in _parallel_samples(model, rng, count):
        f = float(rng.normal() * 1e3)
        fwd = parallel_forward_pass(p, cs, nu)
        asm = parallel_backward_pass(fwd, k_matrices(p, cs), p.e.matrix, fwd.kin.bias_e + fe, f)
        a = (f - float(asm.psi @ nud) - asm.delta) / asm.alpha
        b = parallel_fd_beta(asm.alpha, asm.beta(fwd, nud), f)
        errs.append(abs(a - b))
        scale.append(abs(a))
    return _summary("fd_form_equivalence", errs, scale, 1e-12)


def check_base_wrench(model, rng, count=1000) -> CheckResult:
    """Assembled base wrench vs the direct transported sum."""
    errs, scale = [], []
    for p, cs, nu, nud, _, fe in _parallel_samples(model, rng, count):
        f = float(rng.normal() * 1e3)
        fwd = parallel_forward_pass(p, cs, nu)
        kin = fwd.kin
        asm = parallel_backward_pass(fwd, k_matrices(p, cs), p.e.matrix, kin.bias_e + fe, f)
        xdd = (f - float(asm.psi @ nud) - asm.delta) / asm.alpha
        w = local_wrenches(p, kin, loop_accelerations(cs, kin, nud, xdd), fe)
        direct = base_wrench_direct(kin, w)
        assembled = asm.MA_bc @ nud + asm.pA_bc
        errs.append(float(np.max(np.abs(direct - assembled))))
        scale.append(float(np.max(np.abs(direct))))
    return _summary("assembled_base_wrench", errs, scale, 1e-10, detail="absolute, N and N m")


def check_mass_matrix(model, rng, count=100) -> list[CheckResult]:
    xs, vs = random_states(model, count, rng)
    d_fd, d_sym, min_eig = [], [], []
    scale = []
    for x, v in zip(xs, vs):
        h, bias = mass_matrix_oracle(model, x, v)
        f = bias + h @ rng.normal(size=model.n)
        rec = forward_dynamics(model, ActuatorState(x, v, f)).xddot
        dense = np.linalg.solve(h, f - bias)
        d_fd.append(float(np.max(np.abs(rec - dense))))
        scale.append(float(np.max(np.abs(dense))))
        d_sym.append(float(np.max(np.abs(h - h.T))))
        min_eig.append(float(np.linalg.eigvalsh(0.5 * (h + h.T))[0]))
    sym = _summary("mass_matrix_symmetry", d_sym, [1.0], 1e-8)
    pd = min(min_eig)
    sym.detail = f"min eigenvalue {pd:.3e}"
    sym.passed = sym.passed and pd > 0.0
    return [_summary("mass_matrix_fd", d_fd, scale, 1e-9), sym]


def operation_counts(module, sizes=(1, 2, 4, 8), mount=None) -> dict[int, int]:
    """6x6 products issued by one forward-dynamics call on chains of identical modules."""
    out = {}
    for n in sizes:
        model = identical_chain(module, n, mount)
        x = np.empty(n)
        for k, mod in enumerate(model.modules):
            if isinstance(mod, ParallelModuleParams):
                lo, hi = mod.reachable_range()
                x[k] = 0.5 * (lo + hi)
            else:
                x[k] = 0.1
        with count_products() as box:
            forward_dynamics(model, ActuatorState(x, np.full(n, 0.1), np.zeros(n)))
        out[n] = box[0]
    return out


def linear_fit(counts: dict[int, int]) -> tuple[float, float, float]:
    """Least-squares ``count = a n + b``; returns ``(a, b, max residual)``."""
    n = np.array(sorted(counts), dtype=float)
    c = np.array([counts[k] for k in sorted(counts)], dtype=float)
    a, b = np.polyfit(n, c, 1)
    res = float(np.max(np.abs(a * n + b - c)))
    return float(a), float(b), res


def seed_from_env(default: int = 0) -> int:
    raw = os.environ.get("PSM_SEED")
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def validate(model: ManipulatorModel, name: str = "", seed: int | None = None, samples: int = 1000, duration: float = 10.0, rate: float = 1000.0) -> ValidationReport:
    """Run the full check list on a model.

    Failures, including configuration errors, become report entries.
    """
    seed = seed_from_env() if seed is None else seed
    rng = np.random.default_rng(seed)
    report = ValidationReport(name or model.name or "model")

    def guarded(label, fn):
        try:
            out = fn()
        except ConfigurationError as exc:
            return [CheckResult(label, math.inf, math.inf, math.inf, 0.0, False, f"error: {exc}")]
        return out if isinstance(out, list) else [out]

    def round_trip():
        traj = generate_sinusoid_trajectory(model, default_sinusoid(model, duration, rate))
        err, mag = round_trip_errors(model, traj)
        thr = 1e-10 if model.n == 1 else 1e-9
        res = _summary("fd_id_round_trip", err, mag, thr, use_mean=True, detail="mean of summed |error|, m/s^2")
        if res.max_abs > 1e-8:
            res.passed = False
            res.detail += "; max above 1e-8"
        return res

    report.checks += guarded("fd_id_round_trip", round_trip)
    report.checks += guarded("mass_matrix_fd", lambda: check_mass_matrix(model, rng, min(100, samples)))
    if any(isinstance(m, ParallelModuleParams) for m in model.modules):
        report.checks += guarded("cramer_vs_kmatrix", lambda: check_force_equivalence(model, rng, samples))
        report.checks += guarded("fd_form_equivalence", lambda: check_fd_forms(model, rng, samples))
        report.checks += guarded("assembled_base_wrench", lambda: check_base_wrench(model, rng, samples))
    return report


__all__ = [
    "CheckResult",
    "INTEGRATORS",
    "SimulationConfig",
    "SimulationResult",
    "ValidationReport",
    "check_base_wrench",
    "check_fd_forms",
    "check_force_equivalence",
    "check_mass_matrix",
    "linear_fit",
    "operation_counts",
    "random_states",
    "round_trip_errors",
    "run_forward_dynamics",
    "run_inverse_dynamics",
    "seed_from_env",
    "simulate",
    "validate",
]
