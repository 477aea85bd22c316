import numpy as np
import pytest

from nbqueue import QueueInstance, count_zeros, find_roots_bl, find_roots_fixed_point, regime_instance
from nbqueue.roots import bl_radius_factor, residual


def test_golden_root(golden):
    rs = find_roots_fixed_point(golden)
    assert rs.complete
    assert rs.roots[0] == pytest.approx(-(np.sqrt(5.0) - 1.0) / 2.0, abs=1e-15)
    bl = find_roots_bl(golden)
    assert bl.complete
    assert bl.roots[0] == pytest.approx(rs.roots[0], abs=1e-13)


def test_conjugate_symmetry_and_residuals():
    inst = QueueInstance.from_ab(3.0, 1.0, 5)
    rs = find_roots_fixed_point(inst)
    z = rs.roots
    assert len(z) == 4
    np.testing.assert_allclose(z[::-1], np.conj(z), atol=1e-15)
    assert np.all(np.abs(z) < 1.0)
    assert np.max(residual(inst, z)) < 1e-13


@pytest.mark.parametrize("s, beta, delta", [(10, 1.0, 0.6), (50, 1.0, 0.8), (100, 0.1, 0.6)])
def test_finders_agree(s, beta, delta):
    inst, _ = regime_instance(s, beta, delta)
    fp = find_roots_fixed_point(inst)
    bl = find_roots_bl(inst)
    assert fp.complete
    if bl.complete:
        np.testing.assert_allclose(bl.roots, fp.roots, atol=1e-8)
    else:
        assert bl.status == "diverged"


def test_bl_reports_divergence_near_saturation():
    inst, _ = regime_instance(500, 0.1, 0.6)
    bl = find_roots_bl(inst, terms=1000)
    assert bl.status == "diverged"
    assert len(bl) == 0
    assert bl.info["radius_factor"] < 1.0


def test_radius_factor_tends_to_one():
    q = [bl_radius_factor(QueueInstance.from_ab(2.0, 1.0, s)) for s in (3, 5, 20, 200)]
    assert all(0 < x < 1 for x in q)
    assert q == sorted(q, reverse=True)


@pytest.mark.parametrize("s", [2, 5, 17])
def test_zero_count(s):
    inst = QueueInstance.from_ab(0.6 * s, 1.0, s)
    assert count_zeros(inst, 1.0 - 1e-9) == s - 1
    # z = 1 is a zero too; beyond it the outer zero r0 comes next
    assert count_zeros(inst, 1.0 + 1e-6) == s


def test_not_converged_status():
    inst, _ = regime_instance(50, 0.1, 0.8)
    rs = find_roots_fixed_point(inst, max_iter=3)
    assert rs.status == "not_converged"
    assert not rs.complete
