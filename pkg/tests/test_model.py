import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from nbqueue import (
    ArrivalModel,
    ModelError,
    QueueInstance,
    from_mean_variance,
    log_pmf,
    pgf,
    pmf,
    regime_instance,
    saddle_data,
)
from nbqueue.model import g_prime, g_real, s_g


def test_moments():
    m = ArrivalModel(2.5, 0.4)
    assert m.mean == pytest.approx(1.0)
    assert m.variance == pytest.approx(1.4)
    assert m.radius == pytest.approx(3.5)


@pytest.mark.parametrize("a, b", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (math.inf, 1.0), (1.0, math.nan)])
def test_bad_parameters(a, b):
    with pytest.raises(ModelError):
        ArrivalModel(a, b)


def test_from_mean_variance_roundtrip():
    m = from_mean_variance(7.0, 20.0)
    assert m.mean == pytest.approx(7.0)
    assert m.variance == pytest.approx(20.0)
    with pytest.raises(ModelError):
        from_mean_variance(5.0, 5.0)


def test_pmf_matches_scipy():
    m = ArrivalModel(3.7, 2.2)
    j = np.arange(0, 200)
    ref = stats.nbinom.pmf(j, m.a, 1.0 / (1.0 + m.b))
    np.testing.assert_allclose(pmf(m, j), ref, rtol=1e-11, atol=1e-300)


def test_pmf_sums_to_one_and_large_index():
    m = ArrivalModel(0.8, 5.0)
    j = np.arange(0, 5000)
    assert math.fsum(pmf(m, j)) == pytest.approx(1.0, abs=1e-12)
    # large j stays finite in log space
    assert np.isfinite(log_pmf(m, 1e7))


def test_pgf_values_and_branch_cut():
    m = ArrivalModel(1.5, 0.5)
    assert pgf(m, 1.0) == pytest.approx(1.0)
    assert pgf(m, 0.0) == pytest.approx(1.5 ** -1.5)
    # agrees with the pmf power series inside the unit disk
    z = 0.3 + 0.4j
    j = np.arange(400)
    assert pgf(m, z) == pytest.approx(np.sum(pmf(m, j) * z**j), rel=1e-12)
    with pytest.raises(ModelError):
        pgf(m, m.radius + 0.5)


def test_instance_validation():
    with pytest.raises(ModelError):
        QueueInstance.from_ab(2.0, 1.0, 2)  # rho = 1
    with pytest.raises(ModelError):
        QueueInstance.from_ab(0.5, 1.0, 1.5)
    assert QueueInstance.from_ab(0.5, 1.0, 2.0).s == 2


def test_regime_instance_solves_path():
    inst, pt = regime_instance(50, 1.0, 0.6)
    assert pt.n + pt.beta * pt.n**pt.delta == pytest.approx(50.0, rel=1e-13)
    assert inst.mu == pytest.approx(pt.n, rel=1e-12)
    assert inst.sigma2 == pytest.approx(pt.n ** 1.2, rel=1e-12)
    assert inst.beta == pytest.approx(1.0, rel=1e-10)
    with pytest.raises(ModelError):
        regime_instance(50, 1.0, 0.4)


def test_saddle_data_against_mpmath():
    inst, _ = regime_instance(20, 0.5, 0.7)
    sd = saddle_data(inst)
    assert abs(g_prime(inst, sd.z_sp)) < 1e-14
    mp.mp.dps = 40
    a, b, s = mp.mpf(inst.a), mp.mpf(inst.b), inst.s

    def g(z):
        return -mp.log(z) - a / s * mp.log(1 + b * (1 - z))

    r0 = mp.findroot(g, (mp.mpf(sd.z_sp) + 1e-6, 1 + 1 / b - mp.mpf(1e-9)), solver="bisect")
    assert sd.r0 == pytest.approx(float(r0), rel=1e-13)
    assert sd.g_dd_sp == pytest.approx(float(mp.diff(g, sd.z_sp, 2)), rel=1e-10)


def test_s_g_consistent_with_real_form():
    inst = QueueInstance.from_ab(4.0, 0.5, 3)
    x = np.linspace(-0.5, 1.5, 9)
    np.testing.assert_allclose(s_g(inst, 1 + x).real, inst.s * g_real(inst, x), rtol=1e-12, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(0.2, 300.0),
    b=st.floats(0.02, 60.0),
    rho=st.floats(0.3, 0.995),
)
def test_saddle_ordering(a, b, rho):
    s = max(1, math.ceil(a * b / rho))
    if a * b >= s:
        return
    inst = QueueInstance.from_ab(a, b, s)
    sd = saddle_data(inst)
    assert 1.0 < sd.z_sp < sd.r0 < inst.arrivals.radius
    assert sd.g_sp < 0.0
    # residual relative to the local slope: g is steep near the branch point 1 + 1/b
    x = sd.r0 - 1.0
    slope = abs(-1.0 / (1.0 + x) + inst.rho / (1.0 - inst.b * x))
    assert abs(float(g_real(inst, x))) < 1e-12 * max(1.0, slope * sd.r0)
