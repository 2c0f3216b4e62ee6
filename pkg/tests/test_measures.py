import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from scipy import integrate

from momentforge.errors import IndexOverflow, NegativeOrder, SpecParseError, UnsupportedModel
from momentforge.linalg import psd_check
from momentforge.measures import (
    Dirac,
    DiracMixture,
    ExpDecay,
    Gaussian,
    HalfSecant,
    IFSEquilibrium,
    Lebesgue01,
    Secant,
    Semicircle,
    absolute_moment,
    catalan,
    central_binomial,
    complex_dirac_moment_matrix,
    moment,
    moment_matrix,
    parse_model,
    pdc_check,
    quadrature_moment,
    sample,
)

DENSITIES = {
    "lebesgue01": (Lebesgue01(), lambda x: 1.0, 0.0, 1.0),
    "semicircle": (Semicircle(), lambda x: math.sqrt(max(4 - x * x, 0)) / (2 * math.pi), -2.0, 2.0),
    "secant": (Secant(), lambda x: 1 / (math.pi * math.sqrt(4 - x * x)), -2.0, 2.0),
    "halfsecant": (HalfSecant(), lambda x: 2 / (math.pi * math.sqrt(4 - x * x)), 0.0, 2.0),
    "expdecay": (ExpDecay(), lambda x: math.exp(-x), 0.0, math.inf),
    "gaussian": (Gaussian(F(3, 2)), lambda x: 1.5 / math.sqrt(math.pi) * math.exp(-2.25 * x * x), -math.inf, math.inf),
}


def scipy_moment(name, k):
    """Adaptive QUADPACK, with algebraic endpoint weights for the arcsine-type densities."""
    model, dens, a, b = DENSITIES[name]
    if name == "semicircle":
        val, _ = integrate.quad(lambda x: x**k / (2 * math.pi), -2, 2, weight="alg", wvar=(0.5, 0.5))
    elif name == "secant":
        val, _ = integrate.quad(lambda x: x**k / math.pi, -2, 2, weight="alg", wvar=(-0.5, -0.5))
    elif name == "halfsecant":
        val, _ = integrate.quad(lambda x: 2 * x**k / (math.pi * math.sqrt(2 + x)), 0, 2,
                                weight="alg", wvar=(0, -0.5))
    else:
        val, _ = integrate.quad(lambda x: x**k * dens(x), a, b, limit=200, epsabs=1e-14, epsrel=1e-13)
    return val


# ---------------------------------------------------------------- closed forms

def test_catalog_moment_examples():
    assert moment(Semicircle(), 4).exact == 2
    assert moment(Secant(), 2).exact == 2
    assert moment(ExpDecay(), 5).exact == 120


def test_halfsecant_first_moment_is_four_over_pi():
    m1 = moment(HalfSecant(), 1)
    assert (m1.exact, m1.pi_power) == (4, 1)
    assert m1.approx == pytest.approx(scipy_moment("halfsecant", 1), rel=1e-12)
    assert m1.approx == pytest.approx(1.27324, abs=1e-5)


@pytest.mark.parametrize("name", sorted(DENSITIES))
@pytest.mark.parametrize("k", [0, 1, 2, 3, 6, 9, 12])
def test_closed_forms_match_scipy_quad(name, k):
    model = DENSITIES[name][0]
    assert moment(model, k).approx == pytest.approx(scipy_moment(name, k), rel=1e-9, abs=1e-12)


def test_gaussian_moments_exact_for_rational_p():
    m = moment(Gaussian(F(1, 2)), 4)
    assert m.is_rational and m.exact == F(3, 4) / F(1, 2) ** 4


def test_catalan_and_central_binomial_against_sympy():
    for k in range(16):
        assert catalan(k) == sympy.catalan(k)
        assert central_binomial(k) == sympy.binomial(2 * k, k)


def test_catalan_convolution():
    for k in range(16):
        assert catalan(k + 1) == sum(catalan(n) * catalan(k - n) for n in range(k + 1))


def test_central_binomial_generating_function():
    x = 0.1
    partial = math.fsum(central_binomial(k) * x**k for k in range(200))
    assert partial == pytest.approx((1 - 4 * x) ** -0.5, abs=1e-10)


def test_negative_order():
    with pytest.raises(NegativeOrder):
        moment(Lebesgue01(), -1)


def test_absolute_moments_against_quad():
    assert absolute_moment(Semicircle(), 3) == pytest.approx(
        integrate.quad(lambda x: abs(x) ** 3 * math.sqrt(4 - x * x) / (2 * math.pi), -2, 2)[0], rel=1e-10)
    assert absolute_moment(Gaussian(1), 1) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)
    assert absolute_moment(Secant(), 1) == pytest.approx(4 / math.pi, rel=1e-12)


# ---------------------------------------------------------------- moment matrices

def test_moment_matrix_examples():
    H = moment_matrix(Lebesgue01(), 2).to_array()
    assert all(H[i, j] == F(1, i + j + 1) for i in range(3) for j in range(3))
    assert (moment_matrix(Dirac(1), 3).to_array() == 1).all()
    mix = DiracMixture(((0, F(1, 2)), (1, F(1, 2))))
    assert moment_matrix(mix, 2).seq == (1, F(1, 2), F(1, 2), F(1, 2), F(1, 2))


@pytest.mark.parametrize("model", [Lebesgue01(), Dirac(F(2, 3)), DiracMixture(((0, F(1, 3)), (2, F(2, 3)))),
                                   ExpDecay(), Gaussian(2), Semicircle(), Secant(), HalfSecant()])
def test_moment_matrix_psd(model):
    for n in range(9):
        assert psd_check(moment_matrix(model, n).to_array())


def test_dirac_mixture_validation():
    with pytest.raises(ValueError):
        DiracMixture(((0, F(1, 2)), (0, F(1, 2))))
    with pytest.raises(ValueError):
        DiracMixture(((0, F(1, 2)), (1, F(1, 3))))


def test_ifs_equilibrium_model():
    from momentforge.ifs import cantor_ifs

    assert moment(IFSEquilibrium(cantor_ifs()), 2).exact == F(3, 8)


# ---------------------------------------------------------------- quadrature

def test_quadrature_examples():
    assert quadrature_moment(Lebesgue01(), 3, 16) == pytest.approx(0.25, abs=1e-12)
    assert quadrature_moment(Semicircle(), 6, 64) == pytest.approx(5.0, abs=1e-9)
    assert quadrature_moment(HalfSecant(), 3, 64) == pytest.approx(moment(HalfSecant(), 3).approx, abs=1e-9)


@pytest.mark.parametrize("name", sorted(DENSITIES))
def test_quadrature_concordance_k_le_20(name):
    model = DENSITIES[name][0]
    for k in range(21):
        exact = moment(model, k).approx
        assert abs(exact - quadrature_moment(model, k, 64)) <= 1e-8 * max(1.0, abs(exact))


def test_quadrature_rejects_atoms():
    with pytest.raises(UnsupportedModel):
        quadrature_moment(Dirac(1), 2, 16)


# ---------------------------------------------------------------- sampling

def test_sample_dirac_constant():
    rng = np.random.default_rng(0)
    assert sample(Dirac(1), rng) == 1.0
    assert (sample(Dirac(1), rng, 100) == 1.0).all()


def test_sample_two_atom_mean():
    x = sample(DiracMixture(((0, F(1, 2)), (1, F(1, 2)))), np.random.default_rng(7), 10**6)
    assert abs(x.mean() - 0.5) <= 3 * 0.5 / 1e3


def test_sample_semicircle_second_moment():
    x = sample(Semicircle(), np.random.default_rng(7), 10**6)
    # Var(x^2) = m4 - m2^2 = 2 - 1, the oracle value from the quadrature rule
    var = quadrature_moment(Semicircle(), 4) - quadrature_moment(Semicircle(), 2) ** 2
    assert abs((x**2).mean() - 1.0) <= 3 * math.sqrt(var / 1e6)


def test_sample_is_deterministic_per_seed():
    a = sample(Gaussian(1), np.random.default_rng(3), 10)
    b = sample(Gaussian(1), np.random.default_rng(3), 10)
    assert (a == b).all()


def test_sample_supports():
    rng = np.random.default_rng(1)
    assert sample(HalfSecant(), rng, 1000).min() >= 0
    assert np.abs(sample(Secant(), rng, 1000)).max() <= 2
    assert np.abs(sample(Semicircle(), rng, 1000)).max() <= 2
    with pytest.raises(UnsupportedModel):
        from momentforge.ifs import cantor_ifs
        sample(IFSEquilibrium(cantor_ifs()), rng)


# ---------------------------------------------------------------- complex / PD-C

def test_complex_dirac_matrix():
    assert (complex_dirac_moment_matrix(1, 3) == 1).all()
    M = complex_dirac_moment_matrix(1j, 1)
    assert np.allclose(M, [[1, 1j], [-1j, 1]])
    assert complex_dirac_moment_matrix(2, 2)[1, 1] == 4


def test_pdc_examples():
    rng = np.random.default_rng(5)
    assert pdc_check(complex_dirac_moment_matrix(1j, 4), 2, trials=100, rng=rng)
    assert pdc_check(np.eye(5), 2, trials=100, rng=rng)
    M = np.eye(5)
    M[0, 0] = -1
    v = pdc_check(M, 2, trials=10, rng=rng)
    assert not v
    e00 = np.zeros((3, 3))
    e00[0, 0] = 1
    assert np.array_equal(v.violation, e00)


def test_pdc_index_overflow():
    with pytest.raises(IndexOverflow):
        pdc_check(np.eye(3), 2)


# ---------------------------------------------------------------- spec strings

def test_parse_model():
    assert parse_model("lebesgue01") == Lebesgue01()
    assert parse_model("dirac:b=0.5") == Dirac(0.5)
    assert parse_model("mix:0@1/2,1@1/2") == DiracMixture(((0, F(1, 2)), (1, F(1, 2))))
    assert parse_model("gaussian:p=2") == Gaussian(2)
    assert isinstance(parse_model("ifs:1/3,0@1/2;1/3,2/3@1/2"), IFSEquilibrium)


@pytest.mark.parametrize("text,token", [("wiggle", "wiggle"), ("dirac:b=x", "x"),
                                        ("mix:0@1/2,1", "1"), ("semicircle:p=1", "p=1")])
def test_parse_model_errors_name_token(text, token):
    with pytest.raises(SpecParseError) as exc:
        parse_model(text)
    assert exc.value.token == token
    assert repr(token) in str(exc.value)
