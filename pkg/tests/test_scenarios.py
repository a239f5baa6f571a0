import math

import numpy as np
import pytest

from qmfs import budget
from qmfs.scenarios import (Panel, Report, scenario_fig2, scenario_fig3, scenario_fig4,
                            scenario_force_sensing_note)


@pytest.fixture(scope="module")
def fig2_strong():
    return scenario_fig2("strong")


@pytest.fixture(scope="module")
def fig2_weak():
    return scenario_fig2("weak", C_grid=np.logspace(0, math.log10(30), 8))


@pytest.fixture(scope="module")
def fig3_sweeps():
    return {s: scenario_fig3(s) for s in ("Xp_to_Pp", "Xp_to_Pm", "tomography")}


@pytest.fixture(scope="module")
def fig4():
    return scenario_fig4()


def test_fig2_strong_margins(fig2_strong):
    s = fig2_strong.summary
    assert s["max_db_x2_below_qba"] >= 8.0
    assert s["min_x2_eff"] < 2.0
    assert set(fig2_strong.panels) == {"fig2C", "fig2E"}


def test_fig2_weak_panels(fig2_weak):
    assert set(fig2_weak.panels) == {"fig2A", "fig2B", "fig2D"}
    p = fig2_weak.panels["fig2B"]
    np.testing.assert_allclose(p.column("x2"), 3.2, rtol=1e-9)
    np.testing.assert_allclose(p.column("n_qba"), 2 * p.column("C"))
    # imprecision column tracks the budget line
    np.testing.assert_allclose(p.column("n_imp"), p.column("n_imp_theory"), rtol=0.1)
    lw = fig2_weak.panels["fig2D"]
    np.testing.assert_allclose(lw.column("fwhm_left_hz"), 630.0, rtol=1e-3)


def test_fig2_zero_cooperativity():
    r = scenario_fig2("weak", C_grid=[0.0])
    p = r.panels["fig2B"]
    assert p.column("n_qba")[0] == 0.0
    assert p.column("n_cba")[0] == 0.0
    assert p.column("x2")[0] == pytest.approx(3.2)
    assert math.isnan(p.column("x2_eff")[0])


def test_fig2_bad_cooling():
    with pytest.raises(ValueError):
        scenario_fig2("lukewarm")


@pytest.mark.parametrize("sweep", ["Xp_to_Pp", "Xp_to_Pm"])
def test_fig3_pump_sweeps_flat(fig3_sweeps, sweep):
    p = next(iter(fig3_sweeps[sweep].panels.values()))
    np.testing.assert_allclose(p.column("x2"), 3.2, rtol=1e-9)
    np.testing.assert_allclose(p.column("x2_detected"), 3.2, rtol=5e-3)


def test_fig3_tomography_conjugate_point(fig3_sweeps):
    s = fig3_sweeps["tomography"].summary
    C, nc = 2.1, 0.23
    assert s["x2_at_Pp"] == pytest.approx(3.2 + 2 * C + 4 * C * nc, rel=0.05)
    assert s["max_probe_deviation"] < 0.05


def test_fig3_endpoints_agree(fig3_sweeps):
    a = fig3_sweeps["Xp_to_Pp"].panels["fig3B"].column("x2_detected")[0]
    b = fig3_sweeps["Xp_to_Pm"].panels["fig3C"].column("x2_detected")[0]
    tomo = fig3_sweeps["tomography"].panels["fig3D"]
    c = tomo.column("x2_probe")[0]
    assert b == pytest.approx(a, rel=0.01)
    assert c == pytest.approx(a, rel=0.01)


def test_fig3_theory_lines(fig3_sweeps):
    p = fig3_sweeps["tomography"].panels["fig3D"]
    with_cba = p.column("theory_qba_cba")
    without = p.column("theory_qba")
    assert np.all(with_cba >= without)
    assert max(with_cba) == pytest.approx(budget.thermal_variance(2.7, 2.7) + 4.2 + 1.932)


def test_fig3_unknown_sweep():
    with pytest.raises(ValueError):
        scenario_fig3("sideways")


def test_fig4_entangled(fig4):
    d = fig4.panels["fig4D"]
    assert np.all(d.column("duan_model") < 1.0)
    assert np.all(d.column("duan_probe") < 1.0)
    assert fig4.summary["margin_db_model"] == pytest.approx(-1.4, abs=1.0)
    assert fig4.summary["min_x2_model"] < 0.5


def test_fig4_ideal_probe_entangled():
    r = scenario_fig4(probe_backaction=False, n_angles=8)
    assert r.summary["max_duan_model"] < 1.0


def test_fig4_pure_red_not_entangled():
    r = scenario_fig4(r_blue_red=0.0, n_angles=8)
    assert r.summary["max_duan_model"] >= 1.0


def test_fig4_panels(fig4):
    assert set(fig4.panels) == {"fig4A", "fig4B", "fig4C", "fig4D"}
    assert len(fig4.panels["fig4C"].rows) == 16
    assert len(fig4.panels["fig4D"].rows) == 8


def test_force_linearity_and_snr():
    r = scenario_force_sensing_note()
    p = r.panels["force"]
    F = p.column("force")
    F0 = F[F > 0].min()
    for label in ("X-", "P+"):
        sig = p.column(f"signal_{label}")
        assert np.all(sig[F == 0] == 0.0)
        np.testing.assert_allclose(sig[F == 2 * F0], 2 * sig[F == F0], rtol=1e-12)
    assert r.summary["snr_monotonic_X-"] and r.summary["snr_monotonic_P+"]


def test_panel_csv_deterministic(tmp_path):
    p = Panel("t", "title", ["a", "b", "note"], [[0.1, 1 / 3, "x"]], ["k=1"])
    text = p.to_csv()
    assert text == "# panel: t\n# title: title\n# k=1\na,b,note\n0.1,0.3333333333333333,x\n"
    r = Report("s", {"t": p}, {}, {})
    (path,) = r.write(tmp_path)
    assert open(path).read() == text


def test_fig4_csv_repeatable(tmp_path, fig4):
    again = scenario_fig4(threads=1)
    for name, panel in fig4.panels.items():
        assert panel.to_csv() == again.panels[name].to_csv()
