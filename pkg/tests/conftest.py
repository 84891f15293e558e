import numpy as np
import pytest

E = float(np.e)


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)


@pytest.fixture
def unit_square_grid():
    from curvemod import Grid

    return Grid((0.0, 0.0), (1.0, 1.0), (64, 64))


@pytest.fixture
def annulus_grid():
    from curvemod import Grid

    return Grid((-E, -E), (E, E), (128, 128))


def random_curves(rng, count, lo=(0.1, 0.1), hi=(0.9, 0.9), samples=80):
    """Seeded random polylines for property suites."""
    from curvemod import Curve

    lo = np.asarray(lo)
    hi = np.asarray(hi)
    out = []
    for _ in range(count):
        knots = rng.integers(3, 7)
        ctrl = lo + rng.uniform(0, 1, size=(knots, 2)) * (hi - lo)
        ts = np.linspace(0.0, 1.0, samples)
        ctrl_t = np.linspace(0.0, 1.0, knots)
        pts = np.stack([np.interp(ts, ctrl_t, ctrl[:, a]) for a in range(2)], axis=1)
        out.append(Curve(ts, pts))
    return out
