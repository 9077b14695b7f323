import io

import numpy as np
import pytest

from psmdyn.errors import ParseError, RangeError, ValidationError
from psmdyn.model_io import (
    SinusoidSpec,
    Trajectory,
    default_sinusoid,
    demo_model_path,
    generate_sinusoid_trajectory,
    load_model,
    load_model_file,
    models_equal,
    read_trajectory,
    save_model,
    scale_model,
    serialize_model,
    write_trajectory,
)
from psmdyn.solver import ActuatorState, inverse_dynamics, mechanical_energy

DEMO1 = demo_model_path("demo_1dof").read_text()


def issue_lines(exc):
    return [line for line, _, _ in exc.issues]


def test_demo_models_load(demo1, demo4):
    assert demo1.n == 1 and demo4.n == 4
    assert [m.kind for m in demo4.modules] == ["serial", "parallel", "parallel", "serial"]
    assert demo4.modules[3].is_prismatic


def test_serialize_round_trip(demo1, demo4, tmp_path):
    for m in (demo1, demo4):
        back = load_model(serialize_model(m))
        assert models_equal(m, back, atol=1e-15)
        save_model(m, tmp_path / "m.psm")
        assert models_equal(m, load_model_file(tmp_path / "m.psm"), atol=1e-15)


def test_round_trip_preserves_dynamics(demo4):
    back = load_model(serialize_model(demo4))
    x = np.array([0.2, 0.4, 0.3, 0.2])
    v = np.array([0.1, -0.2, 0.3, 0.1])
    a = np.array([0.5, 0.0, -0.5, 1.0])
    f0 = inverse_dynamics(demo4, ActuatorState(x, v), a)
    f1 = inverse_dynamics(back, ActuatorState(x, v), a)
    np.testing.assert_allclose(f1, f0, rtol=1e-14)


def test_zero_link_length_rejected():
    text = DEMO1.replace("L1: 1.2", "L1: 0.0")
    with pytest.raises(ValidationError) as info:
        load_model(text)
    line = DEMO1.splitlines().index("    L1: 1.2") + 1
    assert line in issue_lines(info.value)
    assert "L1" in str(info.value)


def test_negative_mass_rejected():
    text = DEMO1.replace("mass: 50.0", "mass: -1")
    with pytest.raises(ValidationError) as info:
        load_model(text)
    line = [i for i, s in enumerate(DEMO1.splitlines(), 1) if "mass: 50.0" in s][0]
    assert issue_lines(info.value) == [line]
    assert "non-negative" in str(info.value)


def test_all_issues_reported():
    text = DEMO1.replace("L1: 1.2", "L1: -2").replace("mass: 50.0", "mass: -1").replace("Lc0: 0.9", "Lc0: abc")
    with pytest.raises(ValidationError) as info:
        load_model(text)
    assert len(info.value.issues) == 3
    assert all(line is not None for line in issue_lines(info.value))


def test_unknown_key_rejected():
    text = DEMO1.replace("    L: 0.8", "    L: 0.8\n    Lx: 0.1")
    with pytest.raises(ValidationError) as info:
        load_model(text)
    assert "unknown key" in str(info.value)
    assert issue_lines(info.value) == [DEMO1.splitlines().index("    L: 0.8") + 2]


@pytest.mark.parametrize(
    "snippet, message",
    [
        ("inertia: [[0.3, 0.0, 0.0], [0.0, 4.2, 0.0], [0.0, 0.0, 4.2]]", "triangle"),
        ("inertia: [[-1.0, 0.0, 0.0], [0.0, 4.2, 0.0], [0.0, 0.0, 4.2]]", "semi-definite"),
        ("inertia: [[0.3, 1.0, 0.0], [0.0, 4.2, 0.0], [0.0, 0.0, 4.2]]", "symmetric"),
    ],
)
def test_bad_inertia_rejected(snippet, message):
    # B3 is a thin rod; shrinking its long-axis moments breaks physics
    bad = snippet.replace("4.2", "0.1") if message == "triangle" else snippet
    text = DEMO1.replace("inertia: [[0.3, 0.0, 0.0], [0.0, 4.2, 0.0], [0.0, 0.0, 4.2]]", bad)
    with pytest.raises(ValidationError) as info:
        load_model(text)
    assert message in str(info.value)


def test_rotation_forms_agree():
    base = "format: psm/1\nmodules:\n  - kind: serial\n    screw: revolute\n    bodies: {B4: {mass: 1.0}}\n    tip: {%s}\n"
    rpy = load_model(base % "rpy: [0.0, 0.0, 0.5]").modules[0].tip
    aa = load_model(base % "axis_angle: [0, 0, 2, 0.5]").modules[0].tip
    c, s = float(np.cos(0.5)), float(np.sin(0.5))
    mat = load_model(base % f"rotation: [[{c!r}, {-s!r}, 0], [{s!r}, {c!r}, 0], [0, 0, 1]]").modules[0].tip
    assert rpy.allclose(aa, atol=1e-15)
    assert rpy.allclose(mat, atol=1e-15)
    with pytest.raises(ValidationError):
        load_model(base % "rpy: [0, 0, 1], axis_angle: [0, 0, 1, 1]")
    with pytest.raises(ValidationError):
        load_model(base % "rotation: [[1, 0, 0], [0, 1, 0], [0, 0, -1]]")


def test_bad_screw_rejected():
    base = "format: psm/1\nmodules:\n  - kind: serial\n    screw: %s\n"
    with pytest.raises(ValidationError):
        load_model(base % "[0, 0, 0, 0, 0, 2]")
    with pytest.raises(ValidationError):
        load_model(base % "helical")
    m = load_model(base % "[1, 0, 0, 0, 0, 0]")
    assert m.modules[0].is_prismatic


def test_parse_error_location():
    text = DEMO1.replace("    L: 0.8", "    L: [0.8")
    with pytest.raises(ParseError) as info:
        load_model(text)
    assert info.value.line is not None
    assert "line" in str(info.value)


def test_format_required():
    with pytest.raises(ValidationError):
        load_model(DEMO1.replace("format: psm/1", "format: psm/9"))
    with pytest.raises(ValidationError):
        load_model("")
    with pytest.raises(ValidationError):
        load_model("format: psm/1\nmodules: []\n")


def test_scaling_laws(demo1):
    s = 0.1
    small = scale_model(demo1, s)
    x, v = np.array([0.4]), np.array([0.3])
    t0, p0 = mechanical_energy(demo1, x, v)
    t1, p1 = mechanical_energy(small, x * s, v * s)
    # masses scale with s^3 and speeds with s, lengths with s
    assert t1 == pytest.approx(t0 * s**5, rel=1e-12)
    assert p1 == pytest.approx(p0 * s**4, rel=1e-12)


# ---------------------------------------------------------------------------
# trajectories


def test_trajectory_csv_round_trip(demo4):
    traj = generate_sinusoid_trajectory(demo4, default_sinusoid(demo4, duration=0.05))
    buf = io.StringIO()
    write_trajectory(traj, buf)
    back = read_trajectory(buf.getvalue(), is_text=True)
    assert back.kind == "xddot" and back.rate == traj.rate
    for name in ("t", "x", "xdot", "third"):
        assert np.array_equal(getattr(back, name), getattr(traj, name))


def test_trajectory_file_round_trip(tmp_path):
    t = np.arange(5) / 100.0
    traj = Trajectory(100.0, t, np.ones((5, 2)) / 3, np.zeros((5, 2)), np.full((5, 2), np.pi), "f")
    write_trajectory(traj, tmp_path / "f.csv")
    back = read_trajectory(tmp_path / "f.csv")
    assert back.kind == "f"
    assert np.array_equal(back.f, traj.f)
    with pytest.raises(AttributeError):
        back.xddot


@pytest.mark.parametrize(
    "text, line",
    [
        ("t,x1,xdot1,xddot1\n0,1,2,3\n", 1),
        ("# channels: x1,xdot1,xddot1\n# rate: 10\nt,x1,xdot1,xddot1\n0,1,2,3\n0.1,1,2\n", 5),
        ("# channels: x1,xdot1,xddot1\n# rate: 10\nt,x1,xdot1,xddot1\n0,1,2,oops\n", 4),
        ("# channels: x1,xdot1,xddot1\n# rate: 10\nt,x1,xdot,xddot1\n0,1,2,3\n", 3),
        ("# channels: x1,xdot1,xddot1\n# rate: ten\nt,x1,xdot1,xddot1\n", 2),
    ],
)
def test_trajectory_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        read_trajectory(text, is_text=True)
    assert info.value.line == line


def test_trajectory_rate_mismatch():
    text = "# channels: x1,xdot1,xddot1\n# rate: 10\nt,x1,xdot1,xddot1\n0,1,2,3\n0.5,1,2,3\n"
    with pytest.raises(ParseError):
        read_trajectory(text, is_text=True)


def test_sinusoid_derivatives(demo4):
    traj = generate_sinusoid_trajectory(demo4, default_sinusoid(demo4, duration=1.0, rate=1000.0))
    dt = 1.0 / traj.rate
    vel = (traj.x[2:] - traj.x[:-2]) / (2 * dt)
    acc = (traj.xdot[2:] - traj.xdot[:-2]) / (2 * dt)
    np.testing.assert_allclose(vel, traj.xdot[1:-1], atol=1e-5)
    np.testing.assert_allclose(acc, traj.xddot[1:-1], atol=1e-5)
    assert traj.samples == 1000


def test_sinusoid_covers_sixty_percent(demo1):
    spec = default_sinusoid(demo1)
    lo, hi = demo1.modules[0].reachable_range()
    assert 2 * spec.amplitude[0] == pytest.approx(0.6 * (hi - lo))
    assert spec.center[0] == pytest.approx(0.5 * (lo + hi))


def test_sinusoid_out_of_range(demo1):
    lo, hi = demo1.modules[0].reachable_range()
    with pytest.raises(RangeError, match="upper bound"):
        generate_sinusoid_trajectory(demo1, SinusoidSpec((0.5 * (lo + hi),), (0.6 * (hi - lo),), (1.0,), 1.0))
    with pytest.raises(RangeError, match="non-negative"):
        generate_sinusoid_trajectory(demo1, SinusoidSpec((0.1,), (0.2,), (1.0,), 1.0))


def test_sinusoid_joint_limits(demo4):
    spec = default_sinusoid(demo4)
    bad = SinusoidSpec(spec.center, (2.0,) + spec.amplitude[1:], spec.omega, 1.0)
    with pytest.raises(RangeError, match="joint limits"):
        generate_sinusoid_trajectory(demo4, bad)


def test_zero_amplitude_is_static(demo1):
    traj = generate_sinusoid_trajectory(demo1, SinusoidSpec((0.4,), (0.0,), (1.0,), 0.01))
    assert np.all(traj.x == 0.4)
    assert not np.any(traj.xdot) and not np.any(traj.xddot)
