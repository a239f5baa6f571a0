import math

import pytest
from hypothesis import given, strategies as st

from qmfs import budget
from qmfs.model import hz


def test_cooperativity_entanglement_device():
    C = budget.cooperativity(hz(121e3), hz(1.58e6), hz(69.5))
    assert round(C) == 533


def test_cooperativity_limits():
    assert budget.cooperativity(0.0, 1.0, 1.0) == 0.0
    assert budget.cooperativity(2.0, 3.0, 0.5) == pytest.approx(4 * budget.cooperativity(1.0, 3.0, 0.5))
    with pytest.raises(ValueError):
        budget.cooperativity(1.0, 0.0, 1.0)


@given(st.floats(0.0, 1e4), st.floats(1e-3, 1e7), st.floats(1e-3, 1e5))
def test_coupling_inverts_cooperativity(C, kappa, gamma):
    G = budget.coupling_for_cooperativity(C, kappa, gamma)
    assert budget.cooperativity(G, kappa, gamma) == pytest.approx(C, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("n1,n2,expected", [(32, 24, 28.5), (0, 0, 0.5), (2.7, 2.7, 3.2), (7, 7, 7.5)])
def test_thermal_variance(n1, n2, expected):
    assert budget.thermal_variance(n1, n2) == pytest.approx(expected)


def test_backaction_fig3():
    ba = budget.backaction(2.1, 0.23)
    assert ba.qba == pytest.approx(4.2)
    assert ba.cba == pytest.approx(1.932)
    assert budget.backaction(0.0, 0.23) == (0.0, 0.0)
    assert budget.backaction(3.0, 0.0).cba == 0.0


def test_imprecision():
    assert budget.imprecision(2.1, 0.0) == pytest.approx(0.02976, abs=5e-6)
    for C in (0.3, 4.0, 50.0):
        assert budget.imprecision(C, 0.0) == pytest.approx(1 / (16 * C))
    assert budget.imprecision(0.0, 3.0) == math.inf


def test_fql_within_factor_two_strong_cooling():
    # strong cooling preset: thermal 1.0, imprecision shrinks with C
    totals = [budget.noise_budget(C, 1.0, 0.0, 15.0).measured_total for C in (1, 10, 50)]
    assert min(totals) < 2 * budget.FQL_LEVEL


def test_noise_budget_heating_hook():
    nb = budget.noise_budget(2.0, 3.2, 0.23, 0.0, heating=lambda C: 0.1 * C)
    assert nb.thermal == pytest.approx(3.4)
    assert nb.conjugate_total == pytest.approx(3.4 + 4.0 + 1.84)
    assert budget.noise_budget(2.0, 3.2).thermal == 3.2


def test_sideband_cooling():
    assert budget.sideband_cooling_effective(1.0, 30.0, 0.0) == (1.0, 30.0)
    g, n = budget.sideband_cooling_effective(2.0, 30.0, 9.0)
    assert (g, n) == (20.0, 3.0)
    assert budget.sideband_cooling_effective(2.0, 30.0, math.inf) == (math.inf, 0.0)
    g, n = budget.sideband_cooling_effective(1.0, 1e6, 1e12)
    assert n < 1e-5


def test_cooling_consistency_with_device():
    """Cooling the device to 630 Hz from its intrinsic damping lands near the weak preset."""
    C1 = budget.cooling_for_linewidth(55.0, 630.0)
    C2 = budget.cooling_for_linewidth(84.0, 630.0)
    n1 = budget.sideband_cooling_effective(55.0, 32.0, C1)[1]
    n2 = budget.sideband_cooling_effective(84.0, 24.0, C2)[1]
    assert budget.thermal_variance(n1, n2) == pytest.approx(3.2, rel=0.25)


@pytest.mark.parametrize("value,db", [(1.0, 0.0), (0.724, -1.4), (2.0, 3.01)])
def test_duan_margin(value, db):
    assert budget.duan_margin_db(value) == pytest.approx(db, abs=0.005)


def test_db_below():
    assert budget.db_below(1.0, 10.0) == pytest.approx(10.0)
