import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprtrack import gaussian as gc
from eprtrack.bench import (
    BenchConfig,
    ConfigError,
    ReadoutModel,
    build_bench,
    detector_state,
    predicted_uncertainty_product,
    visibility_to_efficiency,
)


def closed_form(db1, db2, v1=1.0, arm=1.0, v3=1.0, det=1.0):
    """Readout of the bench with equal per-path losses, written out by hand.

    BHD1 sees -(squeezer 2 field) and BHD2 sees the squeezer 1 field, so the
    X reading carries squeezer 2's level and the Y reading squeezer 1's.
    """
    eta = v1**2 * arm * v3**2 * det
    var1 = eta * 10 ** (-db2 / 10) + 1 - eta
    var2 = eta * 10 ** (-db1 / 10) + 1 - eta
    g = v3 * math.sqrt(det) / math.sqrt(2)
    return g * np.eye(2), np.diag([var1, var2])


@pytest.mark.parametrize("v,eta", [(1.0, 1.0), (0.99, 0.9801), (0.5, 0.25)])
def test_visibility_to_efficiency(v, eta):
    assert visibility_to_efficiency(v) == pytest.approx(eta, rel=1e-15)


@pytest.mark.parametrize("v", [0.0, -0.2, 1.01])
def test_visibility_out_of_range(v):
    with pytest.raises(ConfigError):
        visibility_to_efficiency(v)


def test_defaults():
    cfg = BenchConfig()
    assert cfg.bs2_reflectivity == 0.9999
    assert cfg.detector_efficiency == 0.99
    assert (cfg.lo_phase_1, cfg.lo_phase_2) == (0.0, np.pi / 2)


@pytest.mark.parametrize(
    "field,value",
    [
        ("squeezer1_db", -1.0),
        ("bs1_visibility", 0.0),
        ("bs3_visibility", 1.5),
        ("arm_loss_a", 1.2),
        ("detector_efficiency", -0.1),
        ("bs2_reflectivity", 0.0),
        ("lo_phase_1", float("nan")),
    ],
)
def test_invalid_config_rejected(field, value):
    with pytest.raises(ConfigError):
        BenchConfig(**{field: value})


def test_config_dict_round_trip():
    cfg = BenchConfig(squeezer1_db=7.0, arm_loss_b=0.8, entanglement_on=False)
    assert BenchConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        BenchConfig.from_dict({"squeezer_db": 3.0})


def test_ideal_vacuum():
    model = build_bench(BenchConfig.ideal(entanglement_on=False))
    np.testing.assert_allclose(model.gain, np.eye(2) / math.sqrt(2), atol=1e-12)
    np.testing.assert_allclose(model.noise_cov, np.eye(2), atol=1e-12)
    assert predicted_uncertainty_product(model) == pytest.approx(2.0, abs=1e-12)


def test_ideal_ten_db():
    model = build_bench(BenchConfig.ideal(10.0))
    np.testing.assert_allclose(model.noise_cov, 0.1 * np.eye(2), atol=1e-12)
    product = predicted_uncertainty_product(model)
    assert product == pytest.approx(0.2, rel=1e-10)
    assert 2 / product == pytest.approx(10.0, rel=1e-10)


def test_ten_db_with_ninety_percent_efficiency():
    model = build_bench(BenchConfig.ideal(10.0).replace(detector_efficiency=0.9))
    np.testing.assert_allclose(np.diag(model.noise_cov), [0.19, 0.19], rtol=1e-10)


@pytest.mark.parametrize(
    "kw",
    [
        dict(db1=10.0, db2=10.0),
        dict(db1=3.0, db2=8.0),
        dict(db1=10.0, db2=10.0, v1=0.97, arm=0.9, v3=0.95, det=0.8),
        dict(db1=6.0, db2=12.0, v1=0.9, arm=0.5, v3=1.0, det=0.99),
    ],
)
def test_chain_matches_closed_form(kw):
    cfg = BenchConfig(
        squeezer1_db=kw["db1"],
        squeezer2_db=kw["db2"],
        bs1_visibility=kw.get("v1", 1.0),
        bs3_visibility=kw.get("v3", 1.0),
        arm_loss_a=kw.get("arm", 1.0),
        arm_loss_b=kw.get("arm", 1.0),
        detector_efficiency=kw.get("det", 1.0),
        bs2_reflectivity=1.0,
    )
    gain, noise = closed_form(**kw)
    model = build_bench(cfg)
    np.testing.assert_allclose(model.gain, gain, atol=1e-10)
    np.testing.assert_allclose(model.noise_cov, noise, atol=1e-10)


def test_gain_agrees_with_homodyne_of_detector_state():
    cfg = BenchConfig.ideal(10.0)
    model = build_bench(cfg)
    st_ = detector_state(cfg, 3.0, 0.0)
    u, var_u = gc.homodyne_moments(st_, 0, cfg.lo_phase_1)
    v, var_v = gc.homodyne_moments(st_, 1, cfg.lo_phase_2)
    assert u == pytest.approx(3 / math.sqrt(2))
    assert v == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(model.gain @ [3.0, 0.0], [u, v], atol=1e-12)
    assert (var_u, var_v) == pytest.approx(tuple(np.diag(model.noise_cov)))


def test_bs2_reflectivity_costs_little():
    model = build_bench(BenchConfig.ideal(10.0).replace(bs2_reflectivity=0.9999))
    assert model.noise_cov[0, 0] == pytest.approx(0.1, rel=1e-3)


def test_readout_model_validation():
    with pytest.raises(ConfigError):
        ReadoutModel(np.eye(2), np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(ConfigError):
        ReadoutModel(np.eye(2), np.diag([1.0, 0.0]))
    with pytest.raises(ConfigError):
        predicted_uncertainty_product(ReadoutModel(np.zeros((2, 2)), np.eye(2)))


def test_infer_inverts_gain():
    model = build_bench(BenchConfig())
    x, y = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    u, v = model.gain @ np.vstack([x, y])
    xi, yi = model.infer(u, v)
    np.testing.assert_allclose(xi, x, atol=1e-12)
    np.testing.assert_allclose(yi, y, atol=1e-12)


# --- properties --------------------------------------------------------------

efficiency = st.floats(0.05, 1.0)
visibility = st.floats(0.2, 1.0)


@st.composite
def configs(draw):
    """Configs whose two arms see equal total efficiency (arm A loss times BS2).

    Both monotonicity properties need balanced arms: with unbalanced arms the
    anti-squeezed quadrature leaks into the readout, which can then sit above
    vacuum and fall again as squeezing is lost (see
    test_unbalanced_arms_can_read_above_vacuum).
    """
    arm_a = draw(efficiency)
    refl = draw(st.floats(0.99, 1.0))
    return BenchConfig(
        squeezer1_db=draw(st.floats(0, 15)),
        squeezer2_db=draw(st.floats(0, 15)),
        bs1_visibility=draw(visibility),
        bs3_visibility=draw(visibility),
        arm_loss_a=arm_a,
        arm_loss_b=arm_a * refl,
        detector_efficiency=draw(efficiency),
        bs2_reflectivity=refl,
        entanglement_on=draw(st.booleans()),
    )


LOSSY_FIELDS = ["bs1_visibility", "bs3_visibility", "arm_loss_a", "arm_loss_b",
                "detector_efficiency", "bs2_reflectivity"]


@settings(max_examples=150, deadline=None)
@given(configs(), st.sampled_from(LOSSY_FIELDS), st.floats(0.1, 0.99))
def test_more_loss_never_lowers_noise(cfg, name, factor):
    worse = cfg.replace(**{name: getattr(cfg, name) * factor})
    before = np.linalg.eigvalsh(build_bench(cfg).noise_cov)
    after = np.linalg.eigvalsh(build_bench(worse).noise_cov)
    assert np.all(after >= before - 1e-10)


@settings(max_examples=100, deadline=None)
@given(configs().filter(lambda c: c.squeezer1_db > 0.1 and c.squeezer2_db > 0.1))
def test_entanglement_lowers_both_readout_variances(cfg):
    on = build_bench(cfg.replace(entanglement_on=True)).noise_cov
    off = build_bench(cfg.replace(entanglement_on=False)).noise_cov
    assert on[0, 0] < off[0, 0]
    assert on[1, 1] < off[1, 1]


@settings(max_examples=150, deadline=None)
@given(configs())
def test_product_bounds(cfg):
    product = predicted_uncertainty_product(build_bench(cfg))
    assert product > 0
    if cfg.entanglement_on:
        r_max = gc.db_to_r(max(cfg.squeezer1_db, cfg.squeezer2_db))
        assert product >= 2 * math.exp(-2 * r_max) - 1e-12
    else:
        assert product >= 2 - 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 20), st.floats(0, 20))
def test_ideal_closed_form_property(db1, db2):
    model = build_bench(BenchConfig.ideal().replace(squeezer1_db=db1, squeezer2_db=db2))
    gain, noise = closed_form(db1, db2)
    np.testing.assert_allclose(model.gain, gain, atol=1e-10)
    np.testing.assert_allclose(model.noise_cov, noise, atol=1e-10)


def test_unbalanced_arms_can_read_above_vacuum():
    # a 4x loss imbalance between the arms breaks the EPR cancellation
    cfg = BenchConfig(squeezer1_db=1.0, squeezer2_db=5.0, arm_loss_b=0.25, bs2_reflectivity=1.0,
                      detector_efficiency=1.0)
    on = build_bench(cfg).noise_cov
    off = build_bench(cfg.replace(entanglement_on=False)).noise_cov
    assert on[1, 1] > off[1, 1]
