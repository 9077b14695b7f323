import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from psmdyn.closed_loop import ParallelModuleParams  # noqa: E402
from psmdyn.model_io import load_demo  # noqa: E402
from psmdyn.spatial import SpatialInertia, Transform  # noqa: E402


def random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1.0
    return q


def random_transform(rng, scale=1.0) -> Transform:
    return Transform(random_rotation(rng), rng.normal(scale=scale, size=3))


def random_inertia(rng, mass=None) -> SpatialInertia:
    m = rng.uniform(1.0, 50.0) if mass is None else mass
    a = rng.normal(size=(3, 3))
    return SpatialInertia(m, rng.normal(scale=0.2, size=3), a @ a.T + 0.1 * np.eye(3))


def random_loop(rng) -> ParallelModuleParams:
    L = rng.uniform(0.4, 1.2)
    L1 = rng.uniform(0.6, 1.6)
    Lc = rng.uniform(0.05, 0.3)
    Lc0 = rng.uniform(0.3, 0.9)
    return ParallelModuleParams(
        L,
        L1,
        Lc,
        Lc0,
        base_offset=random_transform(rng, 0.2),
        tip=random_transform(rng, 0.5),
        b0=random_inertia(rng),
        b1=random_inertia(rng),
        b3=random_inertia(rng),
        b4=random_inertia(rng),
        e=random_inertia(rng),
    )


def random_x(rng, p: ParallelModuleParams, margin=0.05) -> float:
    lo, hi = p.reachable_range()
    w = hi - lo
    return rng.uniform(lo + margin * w, hi - margin * w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def demo1():
    return load_demo("demo_1dof")


@pytest.fixture(scope="session")
def demo4():
    return load_demo("demo_4dof")
