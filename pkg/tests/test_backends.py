"""Both search kernels must produce bit-identical results."""

import numpy as np
import pytest

from fpplab import (
    EdgeWeightField,
    WeightDistribution,
    Window,
    backend,
    hitting_time,
    passage_time,
    restricted_passage_time,
    source_tree,
)


@pytest.fixture
def forced_backend(monkeypatch):
    def force(name):
        monkeypatch.setenv("FPP_LAB_BACKEND", name)

    return force


def _workload(seed):
    field = EdgeWeightField(WeightDistribution.exponential(1.0), master_seed=seed)
    win = Window(-6, -6, 22, 18)
    geo = passage_time(field, (0, 0), (17, 11))
    tree = source_tree(field, (0, 0), win)
    tau, contact, frozen = hitting_time(
        field, (0, 0), [(10, y) for y in range(-5, 6)], win, certified=False
    )
    strip = restricted_passage_time(field, (0, 0), (12, 0), lambda x, y: abs(y) <= 3, win)
    return geo, tree, tau, contact, frozen, strip


@pytest.mark.skipif(not backend._numba_available(), reason="numba not installed")
def test_backends_bit_identical(forced_backend):
    for seed in (3, 7, 21):
        forced_backend("numba")
        g1, t1, tau1, c1, f1, s1 = _workload(seed)
        forced_backend("numpy")
        g2, t2, tau2, c2, f2, s2 = _workload(seed)

        assert g1.time == g2.time and g1.path == g2.path
        assert np.array_equal(t1.dist_array(), t2.dist_array())
        assert np.array_equal(t1._parent, t2._parent)
        assert tau1 == tau2 and c1 == c2 and f1 == f2
        assert s1.time == s2.time and s1.path == s2.path


def test_numpy_backend_env_flag(forced_backend):
    forced_backend("numpy")
    assert backend.backend_name() == "numpy"
    geo = passage_time(
        EdgeWeightField(WeightDistribution.exponential(1.0), 5), (0, 0), (8, 8)
    )
    assert geo.time > 0 and not geo.touched_boundary


def test_invalid_backend_rejected(forced_backend):
    forced_backend("fortran")
    with pytest.raises(ValueError):
        backend.backend_name()
