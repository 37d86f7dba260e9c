import math

import numpy as np
import pytest

import lclt_lab.model as lm
import lclt_lab.verifier as vf
from conftest import free_chain, nn_chain, regime_finite_range, regime_weak_coupling
from lclt_lab.errors import DomainError, PreconditionError


def test_constants_free_model_oracle():
    """With zero coupling: kappa = 1/card, delta = kappa / (12 sigma),
    and the curvature rate is sigma^2 kappa / 4."""
    model = free_chain(radius=2, spin=(-1, 1))
    c = vf.constants(model)
    assert c.kappa == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert c.delta == pytest.approx(1.0 / 36.0, rel=1e-15)
    assert c.gauss_decay == pytest.approx(1.0 / 12.0, rel=1e-15)
    assert c.c_stated == pytest.approx(c.kappa * math.sin(c.delta / 2.0) ** 2, rel=1e-15)
    assert c.c_proved == pytest.approx(c.kappa**2 * math.sin(c.delta / 2.0) ** 2, rel=1e-15)
    assert c.c_selected == c.c_proved
    assert c.r0_condition_lhs == 0.0
    assert c.r0_condition_ok
    assert c.nu == 0.0 and c.eps == 0.0
    assert c.a_series == pytest.approx(math.log(2.0), rel=1e-15)
    assert c.a_dressed == pytest.approx(c.c_selected / 4.0, rel=1e-15)


def test_constants_binary_oracle():
    model = free_chain(radius=1, spin=(0, 1))
    c = vf.constants(model)
    assert c.kappa == 0.5
    assert c.delta == pytest.approx(1.0 / 24.0, rel=1e-15)
    assert c.gauss_decay == 0.125


def test_constants_variant_switch():
    model = regime_finite_range()
    proved = vf.constants(model, "proved")
    stated = vf.constants(model, "stated")
    assert stated.c_selected == stated.c_stated
    assert proved.c_selected == proved.c_proved
    assert proved.c_proved == pytest.approx(proved.kappa * proved.c_stated, rel=1e-12)
    with pytest.raises(DomainError):
        vf.constants(model, "optimistic")


def test_constants_as_dict_round():
    d = vf.constants(regime_finite_range()).as_dict()
    assert d["r0"] == 2
    assert d["step_norm"] == 0.0
    assert set(d) >= {"kappa", "delta", "gauss_decay", "c_stated", "c_proved", "nu", "eps"}


def test_min_r0_cases():
    assert vf.min_r0(free_chain(radius=2)) == 1
    assert vf.min_r0(regime_finite_range()) == 2
    assert vf.min_r0(regime_weak_coupling()) == 1
    # long-range coupling too strong for any step up to the cap
    model = lm.GibbsModel(
        box=lm.Box(dimension=1, radius=2, r0=1),
        spin=lm.SpinInterval(0, 1),
        coupling=lm.Coupling.power_law(2.0, 3.0),
        boundary=lm.BoundaryCondition.zero(),
    )
    with pytest.raises(PreconditionError):
        vf.min_r0(model, r0_max=6)


def test_failing_branch_labels():
    model = nn_chain(radius=2, strength=0.5, spin=(-1, 1), boundary=None, r0=1)
    c = vf.constants(model)
    assert not c.r0_condition_ok
    labels = c.failing_branches()
    assert "small-t curvature budget" in labels
    assert "large-t dressed series" in labels


def test_single_spin_cf_contraction():
    model = regime_finite_range()
    c = vf.constants(model)
    grid = np.linspace(c.delta, 2 * math.pi - c.delta, 32)
    reports = vf.check_single_spin_cf(model, grid)
    assert len(reports) == 32
    assert vf.all_passed(reports)
    with pytest.raises(DomainError):
        vf.check_single_spin_cf(model, [c.delta / 2])


def test_small_t_decay_regimes():
    for model in (regime_finite_range(), regime_weak_coupling()):
        c = vf.constants(model)
        ts = [c.delta * f for f in (0.25, 0.7, 1.0)]
        reports = vf.check_small_t_decay(model, ts, omega_samples=4, seed=2)
        assert vf.all_passed(reports)
        for r in reports:
            assert r.check_name == "small_t_gaussian_decay"
            assert 0 < r.lhs <= r.rhs + 1e-15


def test_small_t_decay_threaded_matches():
    model = regime_finite_range()
    c = vf.constants(model)
    ts = [c.delta * f for f in (0.3, 0.9)]
    serial = vf.check_small_t_decay(model, ts, omega_samples=4, seed=2)
    threaded = vf.check_small_t_decay(model, ts, omega_samples=4, seed=2, threads=2)
    assert [r.as_dict() for r in serial] == [r.as_dict() for r in threaded]


def test_large_t_decay_regimes():
    for model in (regime_finite_range(), regime_weak_coupling()):
        c = vf.constants(model)
        ts = [c.delta + (math.pi - c.delta) * f for f in (0.2, 0.8, 1.0)]
        reports = vf.check_large_t_decay(model, ts, omega_samples=4, seed=2)
        assert vf.all_passed(reports)
        assert all(r.check_name == "large_t_volume_decay" for r in reports)


def test_decay_requires_admissible_step():
    model = nn_chain(radius=2, strength=0.5, spin=(-1, 1), boundary=None, r0=1)
    with pytest.raises(PreconditionError, match="dressed series"):
        vf.check_small_t_decay(model, [0.001], omega_samples=2)


def test_curvature_reports_biased_model():
    """Biased binary spins: every report holds except the as-displayed
    per-site bound on the quadratic cluster term, whose direction the
    -1/2 prefactor flips; the assembled total still passes."""
    model = regime_finite_range()
    c = vf.constants(model)
    reports = {r.check_name: r for r in vf.check_curvature_decomposition(model, theta=c.delta / 2)}
    assert reports["curvature_series_identity"].passed
    assert reports["curvature_series_identity"].lhs <= 1e-12
    assert reports["curvature_leading_term"].passed
    assert reports["curvature_derivative_sign"].passed
    assert reports["curvature_quadratic_chain"].passed
    assert reports["curvature_series_tail"].passed
    assert reports["curvature_total"].passed
    assert not reports["curvature_quadratic_term"].passed
    assert reports["curvature_quadratic_term"].lhs > reports["curvature_quadratic_term"].rhs


def test_curvature_reports_centered_model():
    """Centered spins: the quadratic term is tiny so its displayed bound
    holds, while the derivative-sign claim fails by order theta^2."""
    model = nn_chain(radius=3, strength=0.1, spin=(-1, 1), boundary=None, r0=2)
    c = vf.constants(model)
    reports = {r.check_name: r for r in vf.check_curvature_decomposition(model, theta=c.delta / 2)}
    assert reports["curvature_quadratic_term"].passed
    assert not reports["curvature_derivative_sign"].passed
    assert 0 < reports["curvature_derivative_sign"].lhs < (c.delta * c.sigma**2) ** 2
    assert reports["curvature_total"].passed


def test_curvature_rejects_coupled_region():
    model = nn_chain(radius=2, strength=0.1, spin=(0, 1), r0=1)
    with pytest.raises(PreconditionError):
        vf.check_curvature_decomposition(model, theta=0.01)
    with pytest.raises(DomainError):
        vf.check_curvature_decomposition(regime_finite_range(), theta=1.0)


def test_dressed_route_weak_coupling():
    model = regime_weak_coupling()
    reports = vf.check_dressed_route(model, t=2.0)
    names = [r.check_name for r in reports]
    assert names == ["dressed_series_budget", "dressed_envelope", "dressed_decay"]
    assert vf.all_passed(reports)


def test_integral_decomposition():
    model = nn_chain(radius=2, strength=0.1, spin=(0, 1), boundary=1, r0=2)
    c = vf.constants(model)
    import lclt_lab.exactengine as ee

    d = ee.statistics(model, region="decimated").variance_S
    a_cut = 0.5 * c.delta * math.sqrt(d)
    dec = vf.integral_decomposition(model, a_cut)
    assert dec.g_n <= dec.total + 1e-8
    assert dec.total == pytest.approx(dec.i1 + dec.i2 + dec.i3 + dec.i4, rel=1e-12)
    assert dec.bound_holds and dec.bound_margin >= -1e-8
    if dec.lemma_ok:
        assert dec.i2_within and dec.i2 <= dec.b_j2 + 1e-12
        assert dec.i3_within and dec.i3 <= dec.b_j3 + 1e-12
    with pytest.raises(DomainError):
        vf.integral_decomposition(model, c.delta * math.sqrt(d) * 1.5)


def test_lclt_trend_free_models():
    rows = vf.lclt_trend([free_chain(radius=r) for r in (2, 4, 8)])
    counts = [row.site_count for row in rows]
    gaps = [row.gap for row in rows]
    assert counts == [5, 9, 17]
    assert gaps[0] > gaps[1] > gaps[2]
    assert all(row.variance_density == pytest.approx(0.25, rel=1e-12) for row in rows)


def test_report_dict_is_stable():
    model = regime_finite_range()
    c = vf.constants(model)
    rep = vf.check_single_spin_cf(model, [c.delta])[0]
    d = rep.as_dict()
    assert set(d) == {"check", "parameters", "lhs", "rhs", "margin", "pass"}
    assert "runtime_ms" not in d
    assert rep.runtime_ms >= 0.0
