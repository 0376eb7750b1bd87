import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radonspline.activations import (
    ActivationError,
    RescaledActivation,
    catalog_lookup,
    catalog_names,
    design_activation,
    eval_batch,
    filter_check,
    g_family_approx,
    load_two_column,
    parse_activation,
    passband,
    roundtrip_penalty,
    save_two_column,
)
from radonspline.fourier import FrequencyGrid, forward_1d

FINITE_ROWS = ["Step", "ReLU", "Sigmoid", "SoftPlus", "Cauchy", "Arctangent", "Gaussian", "Erf",
               "SatReLU", "Wavepacket", "Triangle", "HyperbolicSecant", "LogisticBump"]


# table values


def test_relu_row():
    a = catalog_lookup("ReLU")
    assert a.penalty(2.0) == pytest.approx(16.0)
    assert a.filter(2.0) == pytest.approx(-4.0)


def test_dirac_penalty_is_one():
    a = catalog_lookup("Dirac")
    k = np.linspace(-50, 50, 11)
    np.testing.assert_allclose(a.penalty(k), 1.0)


def test_gaussian_penalty():
    a = catalog_lookup("Gaussian", {"sigma": 1.0})
    assert a.penalty(3.0) == pytest.approx(math.exp(9.0), rel=1e-12)


def test_step_row():
    a = catalog_lookup("Step")
    assert a.filter(5.0) == pytest.approx(5j)
    assert a.penalty(5.0) == pytest.approx(25.0)


# lookup and errors


def test_unknown_name():
    with pytest.raises(ActivationError):
        catalog_lookup("swish")


def test_power_relu_needs_positive_lambda():
    with pytest.raises(ActivationError):
        catalog_lookup("PowerReLU")
    with pytest.raises(ActivationError):
        catalog_lookup("PowerReLU", {"lam": 0.0})
    with pytest.raises(ActivationError):
        catalog_lookup("PowerReLU", {"lam": -1.0})


def test_unknown_shape_param():
    with pytest.raises(ActivationError):
        catalog_lookup("ReLU", {"sigma": 1.0})


def test_parse_activation_params():
    a = parse_activation("sinc:a=0.75")
    assert a.name == "Sinc" and a.shape_params["a"] == 0.75
    assert parse_activation("relu").name == "ReLU"
    with pytest.raises(ActivationError):
        parse_activation("sinc:a")


def test_all_names_build():
    for name in catalog_names():
        params = {"lam": 2.0} if name == "PowerReLU" else {}
        spec = catalog_lookup(name, params)
        assert np.isfinite(spec.penalty(0.7)) or spec.penalty(0.7) == np.inf


# pointwise evaluation


def test_eval_relu():
    np.testing.assert_array_equal(eval_batch(catalog_lookup("ReLU"), [-1.0, 0.0, 2.0]), [0.0, 0.0, 2.0])


def test_eval_satrelu():
    np.testing.assert_array_equal(eval_batch(catalog_lookup("SatReLU", {"delta": 1.0}), [0.5, 3.0]), [0.5, 1.0])


def test_eval_sigmoid_origin():
    assert eval_batch(catalog_lookup("Sigmoid"), [0.0])[0] == 0.5


def test_step_half_at_zero():
    assert eval_batch(catalog_lookup("Step"), [0.0])[0] == 0.5


def test_dirac_not_pointwise():
    with pytest.raises(ActivationError):
        eval_batch(catalog_lookup("Dirac"), [0.0])


def test_eval_batch_rejects_nonfinite():
    with pytest.raises(ActivationError):
        eval_batch(catalog_lookup("ReLU"), [np.nan])


def test_kink_convention():
    z = np.array([0.0])
    assert catalog_lookup("ReLU").deriv(z)[0] == 0.0
    assert catalog_lookup("ReLU", kink="right").deriv(z)[0] == 1.0


def test_sinc_infinite_outside_band():
    # band edge is pi * a
    a = catalog_lookup("Sinc", {"a": 1.0})
    assert a.penalty(3.2) == np.inf
    assert a.penalty(3.1) == pytest.approx(1.0)


# invariants


@given(st.sampled_from(FINITE_ROWS), st.floats(0.05, 20.0))
def test_penalty_is_squared_filter(name, k):
    a = catalog_lookup(name)
    f = a.filter(k)
    if np.isfinite(f):
        assert a.penalty(k) == pytest.approx(abs(f) ** 2, rel=1e-12)


@given(st.sampled_from(FINITE_ROWS + ["Sinc", "Rectangle", "SquaredSinc", "HalfExponential"]), st.floats(0.01, 30.0))
def test_penalty_even(name, k):
    a = catalog_lookup(name)
    p, m = a.penalty(k), a.penalty(-k)
    assert p == m or p == pytest.approx(m, rel=1e-12)


@given(st.floats(0.01, 100.0), st.floats(-10.0, 10.0))
def test_relu_homogeneous(alpha, z):
    a = catalog_lookup("ReLU")
    assert a.eval(alpha * z) == pytest.approx(alpha * a.eval(z), rel=1e-12, abs=1e-300)


@given(st.floats(0.1, 10.0), st.floats(-5.0, 5.0))
def test_rescaled_definition(omega, z):
    base = catalog_lookup("Sigmoid")
    r = RescaledActivation(base, omega)
    assert r.eval(z) == pytest.approx(base.eval(omega * z) / omega, rel=1e-14)


@given(st.floats(0.1, 10.0))
def test_rescaled_homogeneous_base_unchanged(omega):
    base = catalog_lookup("ReLU")
    z = np.linspace(-3, 3, 13)
    np.testing.assert_array_equal(base.rescaled(omega).eval(z), base.eval(z))


def test_rescaled_rejects_nonpositive():
    with pytest.raises(ActivationError):
        RescaledActivation(catalog_lookup("ReLU"), 0.0)


@pytest.mark.parametrize("omega", [0.5, 2.0, 3.0])
def test_rescaling_law_numeric(omega):
    # sampled transform of phi(omega z)/omega against F[phi](k/omega)/omega**2
    base = catalog_lookup("Gaussian")
    fg = FrequencyGrid(64.0, 2**13)
    z = fg.z
    num = forward_1d(base.eval(omega * z) / omega, fg.h, z[0])
    k = fg.k
    ana = base.rescaled(omega).transform(k)
    band = np.abs(ana) > 1e-8
    assert np.linalg.norm(num[band] - ana[band]) / np.linalg.norm(ana[band]) < 1e-8


@pytest.mark.parametrize("name", FINITE_ROWS + ["Rectangle", "Sinc", "SquaredSinc", "HalfExponential"])
def test_filter_matches_sampled_transform(name):
    assert filter_check(catalog_lookup(name)) <= 1e-3


@pytest.mark.parametrize("lam", [1.0, 2.0, 3.0])
def test_power_relu_filter_inverts_transform(lam):
    a = catalog_lookup("PowerReLU", {"lam": lam})
    k = np.linspace(0.3, 20, 50)
    prod = (1j * k) ** lam * a.transform(k)
    np.testing.assert_allclose(prod, 1.0, rtol=1e-12)


# design


def test_design_constant_gives_spike():
    grid = FrequencyGrid(8.0, 256)
    z, phi = design_activation(lambda k: np.ones_like(k), grid=grid)
    j = int(np.argmax(np.abs(phi)))
    assert z[j] == 0.0
    off = np.delete(phi, j)
    assert np.abs(off).max() < 1e-10 * abs(phi[j])
    # unit mass
    assert phi.sum() * grid.h == pytest.approx(1.0, rel=1e-12)


def test_design_k2_causal_is_step():
    grid = FrequencyGrid(32.0, 2**12)
    z, phi = design_activation(lambda k: k**2, "causal_step", grid)
    # an odd spectrum without DC on a periodic grid is sign(z)/2 minus the
    # compensating ramp z/(2L); compare away from the jump and the wrap
    mid = (np.abs(z) > 1.0) & (np.abs(z) < 31.0)
    want = 0.5 * np.sign(z) - z / (2 * grid.half_width)
    assert np.abs(phi[mid] - want[mid]).max() < 1e-2


@pytest.mark.parametrize("rule", ["real_even", "causal_step"])
@pytest.mark.parametrize("rho", [lambda k: np.ones_like(k), lambda k: k**2 + 0.0, lambda k: k**4 + 0.0,
                                 lambda k: np.exp(2 * np.abs(k)), lambda k: np.exp(k**2)])
def test_design_roundtrip(rho, rule):
    grid = FrequencyGrid()
    z, phi = design_activation(rho, rule, grid)
    k, back = roundtrip_penalty(z, phi)
    band = passband(rho, grid, rule)
    with np.errstate(over="ignore"):
        want = rho(k)
    err = np.linalg.norm(back[band] / want[band] - 1.0) / np.sqrt(band.sum())
    assert err <= 1e-3


def test_design_exp_abs_is_cauchy():
    grid = FrequencyGrid(1024.0, 2**18)
    z, phi = design_activation(lambda k: np.exp(2 * np.abs(k)), grid=grid)
    ref = catalog_lookup("Cauchy").eval(z)
    assert np.linalg.norm(phi - ref) / np.linalg.norm(ref) <= 1e-3


def test_design_rejects_vanishing_rho():
    with pytest.raises(ActivationError):
        design_activation(lambda k: np.where(np.abs(k) < 1.0, 0.0, 1.0))


def test_design_rejects_negative():
    with pytest.raises(ActivationError):
        design_activation(lambda k: -np.ones_like(k))


def test_design_rejects_unknown_phase():
    with pytest.raises(ActivationError):
        design_activation(lambda k: np.ones_like(k), "odd")


@pytest.mark.parametrize("n,name", [(1, "Cauchy"), (2, "Gaussian")])
def test_g_family_low_orders(n, name):
    grid = FrequencyGrid(1024.0, 2**18) if n == 1 else FrequencyGrid()
    z, phi = g_family_approx(n, 1.0, grid)
    ref = catalog_lookup(name).eval(z)
    assert np.linalg.norm(phi - ref) / np.linalg.norm(ref) <= 1e-3


def test_g_family_n3_roundtrip():
    grid = FrequencyGrid()
    z, phi = g_family_approx(3, 1.0, grid)
    k, back = roundtrip_penalty(z, phi)
    from radonspline.activations import g_family_penalty

    rho = g_family_penalty(3, 1.0)
    band = passband(rho, grid) & (rho(k) < 1e8)
    assert np.max(np.abs(back[band] / rho(k[band]) - 1.0)) <= 1e-3
    # oscillating: the n=3 bump changes sign
    assert phi.min() < -1e-4 * phi.max()


def test_g_family_errors():
    with pytest.raises(ActivationError):
        g_family_approx(7, 1.0)
    with pytest.raises(ActivationError):
        g_family_approx(1, 1.0, FrequencyGrid(4.0, 2**10))


def test_two_column_roundtrip(tmp_path):
    z = np.linspace(-1, 1, 9)
    phi = np.sin(z) / 3.0
    p = tmp_path / "phi.txt"
    save_two_column(p, z, phi)
    z2, phi2 = load_two_column(p)
    np.testing.assert_array_equal(z, z2)
    np.testing.assert_array_equal(phi, phi2)


def test_oberhettinger_filter_matches_samples():
    assert filter_check(catalog_lookup("OberhettingerIII10")) <= 1e-3
