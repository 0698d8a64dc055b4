import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eprtrack import gaussian as gc

TEN_DB_R = gc.db_to_r(10.0)


def tmsv_cov(r):
    """Closed-form covariance of the two-mode squeezed vacuum with squeezed X_A - X_B and Y_A + Y_B."""
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    z = np.diag([1.0, -1.0])
    return np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])


def epr_state(r):
    st_ = gc.vacuum(2)
    st_ = gc.squeeze(st_, 0, r, np.pi / 2)
    st_ = gc.squeeze(st_, 1, r, 0.0)
    return gc.beamsplitter(st_, 0, 1, 0.5)


# --- construction and validation ---------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 4])
def test_vacuum(n):
    st_ = gc.vacuum(n)
    assert st_.n_modes == n
    np.testing.assert_array_equal(st_.mean, np.zeros(2 * n))
    np.testing.assert_array_equal(st_.cov, np.eye(2 * n))


def test_vacuum_rejects_zero_modes():
    with pytest.raises(ValueError):
        gc.vacuum(0)


@pytest.mark.parametrize("theta", np.linspace(0, 2 * np.pi, 7))
def test_vacuum_homodyne_phase_invariant(theta):
    assert gc.homodyne_moments(gc.vacuum(1), 0, theta) == pytest.approx((0.0, 1.0), abs=1e-15)


def test_state_is_immutable():
    st_ = gc.vacuum(1)
    with pytest.raises(ValueError):
        st_.cov[0, 0] = 2.0


@pytest.mark.parametrize(
    "cov",
    [
        np.diag([0.5, 0.5]),  # below vacuum in both quadratures
        np.array([[1.0, 0.2], [0.0, 1.0]]),  # asymmetric
        np.diag([1.0, np.nan]),
    ],
)
def test_unphysical_or_malformed_rejected(cov):
    with pytest.raises(ValueError):
        gc.QuadratureState(np.zeros(2), cov)


def test_squeezed_state_at_minimum_uncertainty_is_physical():
    gc.QuadratureState(np.zeros(2), np.diag([0.1, 10.0]))


# --- squeezing ------------------------------------------------------------

def test_squeeze_ten_db():
    st_ = gc.squeeze(gc.vacuum(1), 0, TEN_DB_R, 0.0)
    np.testing.assert_allclose(st_.cov, np.diag([0.1, 10.0]), rtol=1e-12)


def test_squeeze_zero_is_identity():
    st_ = gc.squeeze(gc.displace(gc.vacuum(1), 0, 1.0, 2.0), 0, 0.0, 0.3)
    np.testing.assert_allclose(st_.cov, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(st_.mean, [1.0, 2.0], atol=1e-15)


@pytest.mark.parametrize("r", [0.1, 0.7, TEN_DB_R])
def test_squeeze_quarter_turn_squeezes_y(r):
    st_ = gc.squeeze(gc.vacuum(1), 0, r, np.pi / 2)
    # rotate-squeeze-rotate against the direct 2x2 construction
    direct = np.diag([np.exp(2 * r), np.exp(-2 * r)])
    np.testing.assert_allclose(st_.cov, direct, atol=1e-12)


def test_squeeze_negative_r_rejected():
    with pytest.raises(ValueError):
        gc.squeeze(gc.vacuum(1), 0, -0.1)


@pytest.mark.parametrize("db,r", [(0.0, 0.0), (10.0, 0.5 * math.log(10)), (3.0, 0.15 * math.log(10))])
def test_db_to_r(db, r):
    assert gc.db_to_r(db) == pytest.approx(r, rel=1e-14, abs=1e-15)


# --- beam splitter ---------------------------------------------------------

def test_beamsplitter_leaves_vacuum():
    st_ = gc.beamsplitter(gc.vacuum(2), 0, 1, 0.5)
    np.testing.assert_allclose(st_.cov, np.eye(4), atol=1e-15)


def test_beamsplitter_unit_transmission_is_identity():
    st_ = epr_state(0.3)
    out = gc.beamsplitter(st_, 0, 1, 1.0, 0.7)
    np.testing.assert_allclose(out.cov, st_.cov, atol=1e-14)


@pytest.mark.parametrize("T", [-0.1, 1.1])
def test_beamsplitter_range(T):
    with pytest.raises(ValueError):
        gc.beamsplitter(gc.vacuum(2), 0, 1, T)


def test_beamsplitter_same_mode_rejected():
    with pytest.raises(ValueError):
        gc.beamsplitter(gc.vacuum(2), 1, 1, 0.5)


@pytest.mark.parametrize("T", [0.0, 0.3, 0.5, 0.9])
@pytest.mark.parametrize("phase", [0.0, 0.4, np.pi / 2, 2.5])
def test_beamsplitter_symplectic_and_inverse(T, phase):
    s = gc.beamsplitter_symplectic(T, phase)
    assert gc.is_symplectic(s)
    inv = gc.beamsplitter_symplectic(T, phase + np.pi)
    np.testing.assert_allclose(inv @ s, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("r", [0.2, 0.8, TEN_DB_R])
def test_epr_matches_closed_form(r):
    st_ = epr_state(r)
    np.testing.assert_allclose(st_.cov, tmsv_cov(r), atol=1e-10)
    assert gc.joint_quadrature_variance(st_, 0, 1, "X", "-") == pytest.approx(np.exp(-2 * r), abs=1e-10)
    assert gc.joint_quadrature_variance(st_, 0, 1, "Y", "+") == pytest.approx(np.exp(-2 * r), abs=1e-10)


def test_epr_product_unbounded_below():
    products = [
        gc.joint_quadrature_variance(epr_state(r), 0, 1, "X", "-")
        * gc.joint_quadrature_variance(epr_state(r), 0, 1, "Y", "+")
        for r in (0.5, 1.0, 2.0, 3.0)
    ]
    np.testing.assert_allclose(products, np.exp(-4 * np.array([0.5, 1.0, 2.0, 3.0])), rtol=1e-9)
    assert all(np.diff(products) < 0)


def test_epr_anti_correlated_combinations_are_noisy():
    r = TEN_DB_R
    st_ = epr_state(r)
    assert gc.joint_quadrature_variance(st_, 0, 1, "X", "+") == pytest.approx(np.exp(2 * r))
    assert gc.joint_quadrature_variance(st_, 0, 1, "Y", -1) == pytest.approx(np.exp(2 * r))


def test_displacement_through_balanced_splitter():
    st_ = gc.beamsplitter(gc.displace(gc.vacuum(2), 0, 3.0, 4.0), 0, 1, 0.5)
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(st_.mean, [3 * s, 4 * s, 3 * s, 4 * s], atol=1e-14)


# --- displacement, loss, rotation, homodyne ------------------------------

def test_displace():
    st_ = gc.displace(gc.vacuum(1), 0, 3.0, 4.0)
    np.testing.assert_array_equal(st_.mean, [3.0, 4.0])
    np.testing.assert_array_equal(st_.cov, np.eye(2))


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_displace_additive(ax, ay, bx, by):
    a = gc.displace(gc.displace(gc.vacuum(1), 0, ax, ay), 0, bx, by)
    b = gc.displace(gc.vacuum(1), 0, ax + bx, ay + by)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)


def test_loss_limits():
    sq = gc.displace(gc.squeeze(gc.vacuum(1), 0, TEN_DB_R), 0, 2.0, 0.0)
    np.testing.assert_allclose(gc.loss(sq, 0, 1.0).cov, sq.cov)
    out = gc.loss(sq, 0, gc.LossChannel(0.0))
    np.testing.assert_allclose(out.cov, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(out.mean, [0.0, 0.0])


def test_loss_ten_db_at_ninety_percent():
    sq = gc.squeeze(gc.vacuum(1), 0, TEN_DB_R)
    assert gc.loss(sq, 0, 0.9).cov[0, 0] == pytest.approx(0.19, rel=1e-12)


@pytest.mark.parametrize("eta", [0.0, 0.3, 0.9, 1.0])
def test_loss_matches_beamsplitter_with_vacuum_ancilla(eta):
    base = gc.displace(gc.squeeze(gc.vacuum(1), 0, 0.8, 0.3), 0, 1.5, -2.0)
    direct = gc.loss(base, 0, eta)
    joint = gc.QuadratureState(
        np.concatenate([base.mean, [0.0, 0.0]]),
        np.block([[base.cov, np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]]),
    )
    mixed = gc.beamsplitter(joint, 0, 1, eta)
    np.testing.assert_allclose(mixed.mode_cov(0), direct.cov, atol=1e-12)
    np.testing.assert_allclose(mixed.mode_mean(0), direct.mean, atol=1e-12)


@pytest.mark.parametrize("eta", [-0.01, 1.01])
def test_loss_channel_range(eta):
    with pytest.raises(ValueError):
        gc.LossChannel(eta)


def test_phase_rotate_quarter_turn():
    st_ = gc.phase_rotate(gc.displace(gc.vacuum(1), 0, 1.0, 2.0), 0, np.pi / 2)
    np.testing.assert_allclose(st_.mean, [-2.0, 1.0], atol=1e-15)


def test_phase_rotate_zero_identity():
    st_ = epr_state(0.4)
    np.testing.assert_allclose(gc.phase_rotate(st_, 1, 0.0).cov, st_.cov, atol=1e-15)


@given(st.floats(0, 2 * np.pi), st.floats(0, 1.5), st.floats(0, np.pi))
def test_phase_rotate_preserves_symplectic_eigenvalues_and_norm(phi, r, theta):
    st_ = gc.displace(gc.squeeze(epr_state(0.5), 0, r, theta), 0, 1.0, -0.5)
    rot = gc.phase_rotate(st_, 0, phi)
    np.testing.assert_allclose(
        np.sort(gc.symplectic_eigenvalues(rot.cov)), np.sort(gc.symplectic_eigenvalues(st_.cov)), rtol=1e-9
    )
    assert np.linalg.norm(rot.mode_mean(0)) == pytest.approx(np.linalg.norm(st_.mode_mean(0)))


def test_homodyne_squeezed_and_displaced():
    sq = gc.squeeze(gc.vacuum(1), 0, TEN_DB_R, 0.0)
    assert gc.homodyne_moments(sq, 0, 0.0) == pytest.approx((0.0, 0.1))
    assert gc.homodyne_moments(gc.displace(gc.vacuum(1), 0, 3, 4), 0, 0.0) == pytest.approx((3.0, 1.0))


def test_joint_variance_of_vacuum():
    for q in "XY":
        for s in "+-":
            assert gc.joint_quadrature_variance(gc.vacuum(2), 0, 1, q, s) == pytest.approx(1.0)


def test_mode_index_checked():
    with pytest.raises(IndexError):
        gc.displace(gc.vacuum(2), 2, 0.0, 0.0)


# --- random sequences --------------------------------------------------------

def _op(kind, modes, a, b, c):
    def apply(s):
        i, j = modes
        if kind == "squeeze":
            return gc.squeeze(s, i, a, 2 * np.pi * b)
        if kind == "bs":
            return gc.beamsplitter(s, i, j, b, 2 * np.pi * c) if i != j else s
        if kind == "rotate":
            return gc.phase_rotate(s, i, 2 * np.pi * b)
        if kind == "displace":
            return gc.displace(s, i, 5 * a, -5 * c)
        return gc.loss(s, i, b)
    return kind, apply


op_strategy = st.builds(
    _op,
    st.sampled_from(["squeeze", "bs", "rotate", "displace", "loss"]),
    st.tuples(st.integers(0, 3), st.integers(0, 3)),
    st.floats(0, 1.5),
    st.floats(0, 1),
    st.floats(0, 1),
)


@settings(max_examples=200, deadline=None)
@given(st.lists(op_strategy, min_size=1, max_size=8))
def test_random_sequences_stay_physical(ops):
    s = gc.vacuum(4)
    for kind, apply in ops:
        before = s
        s = apply(s)
        nu = gc.symplectic_eigenvalues(s.cov)
        assert nu.min() >= 1 - gc.PHYSICALITY_TOL
        if kind in ("squeeze", "bs", "rotate", "displace"):
            assert np.linalg.det(s.cov) == pytest.approx(np.linalg.det(before.cov), rel=1e-8)
        else:
            assert nu.min() >= min(1.0, gc.symplectic_eigenvalues(before.cov).min()) - 1e-9
    for m in range(4):
        for theta in np.linspace(0, np.pi, 5):
            _, v1 = gc.homodyne_moments(s, m, theta)
            _, v2 = gc.homodyne_moments(s, m, theta + np.pi / 2)
            assert math.sqrt(v1 * v2) >= 1 - 1e-9


# --- Monte-Carlo oracle ------------------------------------------------------

@pytest.mark.parametrize(
    "label,state",
    [
        ("epr", epr_state(TEN_DB_R)),
        ("lossy", gc.loss(gc.loss(epr_state(0.6), 0, 0.8), 1, 0.7)),
        ("vacuum", gc.vacuum(2)),
    ],
)
def test_monte_carlo_joint_variances(label, state):
    rng = np.random.default_rng(12345)
    draws = state.sample(1_000_000, rng)
    for q, off in (("X", 0), ("Y", 1)):
        for sign in (1, -1):
            samples = (draws[:, off] + sign * draws[:, 2 + off]) / math.sqrt(2)
            exact = gc.joint_quadrature_variance(state, 0, 1, q, sign)
            # known-mean estimator: se = var * sqrt(2/n)
            est = float(np.mean((samples - np.mean(samples)) ** 2))
            assert abs(est - exact) <= 5 * exact * math.sqrt(2 / samples.size), (label, q, sign)
