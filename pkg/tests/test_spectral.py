import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from momentforge.errors import (
    BoundNotApplicable,
    NonpositiveWeight,
    OutOfRange,
    OutsideRadius,
    SeriesDivergent,
    SpecParseError,
)
from momentforge.linalg import hilbert_matrix, psd_check, sym_eig
from momentforge.measures import (
    Dirac,
    DiracMixture,
    ExpDecay,
    Gaussian,
    HalfSecant,
    Lebesgue01,
    Secant,
    Semicircle,
    moment_matrix,
)
from momentforge.spectral import (
    WeightScheme,
    closed_form_two_atom_spectrum,
    hs_trace,
    nystrom_kernel_spectrum,
    operator_norm_bounds,
    parse_weights,
    truncated_spectrum,
    weighted_kato_matrix,
)

TWO = DiracMixture(((0, F(1, 2)), (1, F(1, 2))))


def two_point(b):
    return DiracMixture(((0, F(1, 2)), (b, F(1, 2))))


# ---------------------------------------------------------------- weights

def test_weight_schemes():
    assert WeightScheme.powers_of_two().weights(4) == [1, 1, 2, 4, 8]
    assert WeightScheme.geometric(2).weights(3) == [1, 4, 16, 64]
    assert WeightScheme.unweighted().tail_sum(5) == 5
    assert WeightScheme.powers_of_two().tail_sum(3) == F(7, 4)
    # (1 + k^2) times the squared absolute moment; for Dirac(2) that is (1 + k^2) 4^k
    assert WeightScheme.absolute_moment(Dirac(2)).weights(2) == [1, 8, 80]
    assert WeightScheme.factorial_squares().weights(2) == [1, 4, 576]


def test_nonpositive_weight():
    with pytest.raises(NonpositiveWeight):
        WeightScheme.custom([1, 0, 2]).weights(2)
    with pytest.raises(NonpositiveWeight):
        WeightScheme.custom([1, 1]).weights(4)
    with pytest.raises(NonpositiveWeight):
        weighted_kato_matrix(hilbert_matrix(2), WeightScheme.custom([1, -1, 1]))


def test_parse_weights():
    assert parse_weights("pow2") == WeightScheme.powers_of_two()
    assert parse_weights("geom:3/2").t == F(3, 2)
    assert parse_weights("custom:1,2,6").weights(2) == [1, 2, 6]
    assert parse_weights("absmoment", Lebesgue01()).kind == "absmoment"
    for bad, token in [("geom:x", "x"), ("wobble", "wobble"), ("pow2:3", "3"), ("custom:1,z", "z")]:
        with pytest.raises(SpecParseError) as exc:
            parse_weights(bad)
        assert exc.value.token == token


# ---------------------------------------------------------------- weighted matrices

def test_weighted_matrix_examples():
    H = hilbert_matrix(4)
    assert (weighted_kato_matrix(H, WeightScheme.unweighted()) == H).all()
    Hd = weighted_kato_matrix(moment_matrix(Dirac(1), 6).to_array(),
                              WeightScheme.custom(lambda k: (k + 1) * (k + 2)))
    lam = sym_eig(np.array(Hd, dtype=float)).eigenvalues
    assert lam[0] == pytest.approx(sum(1 / ((k + 1) * (k + 2)) for k in range(7)), rel=1e-14)
    assert np.all(np.abs(lam[1:]) <= 1e-15)
    P = weighted_kato_matrix(moment_matrix(TWO, 1).to_array(), WeightScheme.powers_of_two())
    assert P.tolist() == [[1, F(1, 2)], [F(1, 2), F(1, 2)]]


def test_weighted_matrix_exact_for_square_weights():
    H = weighted_kato_matrix(hilbert_matrix(3), WeightScheme.geometric(F(1, 2)))
    assert all(isinstance(v, F) for v in H.ravel())
    assert H[2, 3] == F(1, 6) * 2**5


def test_rank_one_projection():
    # weights with sum 1/w_k = 1 over all k; at finite n the rank-one Gram value is the partial sum
    w = WeightScheme.custom(lambda k: (k + 1) * (k + 2))
    rep = truncated_spectrum(Dirac(1), w, 200)
    partial = math.fsum(1 / ((k + 1) * (k + 2)) for k in range(201))
    assert abs(rep.top - partial) <= 1e-12
    assert rep.eigenvalues[1] <= 1e-12


CATALOG = [Lebesgue01(), Dirac(F(1, 3)), TWO, ExpDecay(), Gaussian(2), Semicircle(), Secant(), HalfSecant()]
SCHEMES = [WeightScheme.unweighted(), WeightScheme.powers_of_two(), WeightScheme.geometric(2),
           WeightScheme.factorial_squares()]


@pytest.mark.parametrize("model", CATALOG, ids=lambda m: m.spec())
@pytest.mark.parametrize("scheme", SCHEMES + ["absmoment"], ids=lambda s: s if isinstance(s, str) else s.spec())
def test_weighted_psd(model, scheme):
    if scheme == "absmoment":
        scheme = WeightScheme.absolute_moment(model)
    for n in (0, 4, 16):
        H = weighted_kato_matrix(moment_matrix(model, n).to_array(), scheme)
        Hf = np.array(H, dtype=float)
        assert np.all(np.isfinite(Hf))
        assert psd_check(H, tol=1e-9)


def test_factorial_squares_make_exp_decay_entries_small():
    H = weighted_kato_matrix(moment_matrix(ExpDecay(), 16).to_array(), WeightScheme.factorial_squares())
    Hf = np.array(H, dtype=float)
    assert np.all(np.isfinite(Hf)) and np.abs(Hf).max() == 1
    assert psd_check(Hf, tol=1e-9)


# ---------------------------------------------------------------- closed forms

def test_two_atom_closed_form_paper_value():
    cf = closed_form_two_atom_spectrum("zero_one", 2)
    assert cf["lambda_plus"] == pytest.approx(1 + 1 / math.sqrt(2), abs=1e-15)
    assert cf["lambda_minus"] == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-15)


def test_two_atom_degenerate_limit():
    cf = closed_form_two_atom_spectrum("zero_one", 1e-12)
    assert cf["lambda_plus"] == pytest.approx(1, abs=1e-11)
    assert 0 < cf["lambda_minus"] <= 1e-11


@pytest.mark.parametrize("T", [0.5, 1, 2, 10])
def test_lambda_relations(T):
    cf = closed_form_two_atom_spectrum("zero_one", T)
    lp, lm = cf["lambda_plus"], cf["lambda_minus"]
    assert abs(lp * lm - T / 4) <= 1e-14
    assert abs(lp + lm - (1 + T / 2)) <= 1e-14


def test_zero_b_closed_form():
    cf = closed_form_two_atom_spectrum("zero_b", F(1, 2))
    assert cf["T"] == pytest.approx(1 / 3, abs=1e-16)
    root = math.sqrt(1 / 36 + 1)
    assert cf["lambda_plus"] == pytest.approx(0.5 * (7 / 6 + root), abs=1e-15)
    assert cf["lambda_minus"] == pytest.approx(0.5 * (7 / 6 - root), abs=1e-15)
    lam = truncated_spectrum(two_point(F(1, 2)), WeightScheme.unweighted(), 40).eigenvalues
    assert abs(lam[0] - cf["lambda_plus"]) <= 1e-8
    assert abs(lam[1] - cf["lambda_minus"]) <= 1e-8


def test_zero_b_eigenvector_shape():
    b = 0.5
    cf = closed_form_two_atom_spectrum("zero_b", b)
    n = 40
    H = np.array(moment_matrix(two_point(F(1, 2)), n).to_array(), dtype=float)
    for lam, alpha in [(cf["lambda_plus"], cf["alpha_plus"]), (cf["lambda_minus"], cf["alpha_minus"])]:
        v = np.array([alpha] + [b**k for k in range(1, n + 1)])
        assert np.linalg.norm(H @ v - lam * v) <= 1e-12 * np.linalg.norm(v)


def test_closed_form_out_of_range():
    for kind, v in [("zero_one", 0), ("zero_one", -1), ("zero_b", 1), ("zero_b", 0), ("other", 1)]:
        with pytest.raises(OutOfRange):
            closed_form_two_atom_spectrum(kind, v)


def test_pow2_truncation_matches_paper_value():
    rep = truncated_spectrum(TWO, WeightScheme.powers_of_two(), 40)
    assert abs(rep.eigenvalues[0] - (1 + 1 / math.sqrt(2))) <= 1e-10
    assert abs(rep.eigenvalues[1] - (1 - 1 / math.sqrt(2))) <= 1e-10
    Tn = float(WeightScheme.powers_of_two().tail_sum(40))
    cf = closed_form_two_atom_spectrum("zero_one", Tn)
    assert abs(rep.eigenvalues[0] - cf["lambda_plus"]) <= 1e-13
    assert abs(rep.eigenvalues[1] - cf["lambda_minus"]) <= 1e-13


@pytest.mark.parametrize("n", [1, 3, 12])
def test_truncated_two_atom_tracks_tail_sum(n):
    w = WeightScheme.geometric(F(3, 2))
    rep = truncated_spectrum(TWO, w, n)
    cf = closed_form_two_atom_spectrum("zero_one", float(w.tail_sum(n)))
    assert rep.eigenvalues[:2] == pytest.approx([cf["lambda_plus"], cf["lambda_minus"]], abs=1e-13)


# ---------------------------------------------------------------- atoms and ranks

atom_sets = st.lists(st.fractions(min_value=-1, max_value=1, max_denominator=6), min_size=1, max_size=5,
                     unique=True)


@settings(max_examples=30, deadline=None)
@given(atom_sets, st.sampled_from(["unweighted", "pow2", "geom:2"]))
def test_atom_count_equals_large_eigenvalues(atoms, scheme):
    mu = DiracMixture(tuple((a, F(1, len(atoms))) for a in atoms))
    w = parse_weights(scheme)
    rep = truncated_spectrum(mu, w, 12)
    lam = rep.eigenvalues
    assert int(np.sum(lam > 1e-9 * lam[0])) == len(atoms)


def test_hilbert_truncations_increase_below_pi():
    tops = [truncated_spectrum(Lebesgue01(), WeightScheme.unweighted(), n).top for n in (4, 8, 16, 32, 64)]
    assert all(b > a for a, b in zip(tops, tops[1:]))
    assert tops[-1] < math.pi
    assert truncated_spectrum(Lebesgue01(), WeightScheme.unweighted(), 1).top == pytest.approx(
        (4 + math.sqrt(13)) / 6, rel=1e-14)


# ---------------------------------------------------------------- Nystrom

def test_nystrom_two_point_matches_matrix_side():
    mu = two_point(F(1, 2))
    ny = nystrom_kernel_spectrum(mu, WeightScheme.unweighted())
    assert len(ny.eigenvalues) == 2
    lam = truncated_spectrum(mu, WeightScheme.unweighted(), 40).eigenvalues
    assert np.allclose(ny.eigenvalues, lam[:2], rtol=0, atol=1e-8)


def test_nystrom_dirac_zero():
    ny = nystrom_kernel_spectrum(Dirac(0), WeightScheme.custom([F(3)] * 4))
    assert ny.eigenvalues.tolist() == pytest.approx([1 / 3], abs=1e-16)
    assert nystrom_kernel_spectrum(Dirac(0), WeightScheme.unweighted()).top == 1


def test_nystrom_lebesgue_top_eigenvalue():
    ny = nystrom_kernel_spectrum(Lebesgue01(), WeightScheme.unweighted(), quad_nodes=128)
    mat = truncated_spectrum(Lebesgue01(), WeightScheme.unweighted(), 256)
    # both sides creep up to pi logarithmically and at different rates
    assert abs(ny.top - mat.top) <= 0.05


def test_nystrom_lebesgue_increases_below_pi():
    tops = [nystrom_kernel_spectrum(Lebesgue01(), WeightScheme.unweighted(), quad_nodes=q).top
            for q in (16, 32, 64, 128)]
    assert all(b > a for a, b in zip(tops, tops[1:]))
    assert tops[-1] < math.pi


def test_nystrom_series_kernel_against_scipy_kernel():
    # geometric weights: the kernel has the closed form 1/(1 - xy/t^2)
    mu = DiracMixture(((F(-1, 2), F(1, 4)), (F(1, 3), F(1, 4)), (1, F(1, 2))))
    closed = nystrom_kernel_spectrum(mu, WeightScheme.geometric(2))
    series = nystrom_kernel_spectrum(mu, WeightScheme.custom(lambda k: 4**k))
    assert np.allclose(closed.eigenvalues, series.eigenvalues, rtol=0, atol=1e-14)


def test_nystrom_smooth_density_geometric():
    # eigenvalues of the order-n truncation converge to the kernel operator's
    ny = nystrom_kernel_spectrum(Semicircle(), WeightScheme.geometric(3), quad_nodes=128)
    mat = truncated_spectrum(Semicircle(), WeightScheme.geometric(3), 40)
    assert np.allclose(ny.eigenvalues[:5], mat.eigenvalues[:5], rtol=0, atol=1e-10)


def test_nystrom_series_divergent():
    with pytest.raises(SeriesDivergent):
        nystrom_kernel_spectrum(Semicircle(), WeightScheme.unweighted())
    with pytest.raises(SeriesDivergent):
        nystrom_kernel_spectrum(ExpDecay(), WeightScheme.powers_of_two())


@settings(max_examples=25, deadline=None)
@given(atom_sets, st.sampled_from(["unweighted", "pow2", "geom:2"]))
def test_nystrom_equals_matrix_side_on_mixtures(atoms, scheme):
    mu = DiracMixture(tuple((a, F(1, len(atoms))) for a in atoms))
    w = parse_weights(scheme)
    n = 12
    lam = truncated_spectrum(mu, w, n).eigenvalues
    ny = nystrom_kernel_spectrum(mu, w, series_terms=n + 1).eigenvalues
    k = len(atoms)
    assert np.allclose(ny[:k], lam[:k], rtol=0, atol=1e-8)


# ---------------------------------------------------------------- bounds

def test_tpi_bound_semicircle():
    out = operator_norm_bounds(Semicircle(), 2)
    assert out["tpi_bound"] == pytest.approx(2, abs=1e-15)
    # the density's maximum, located numerically
    from scipy.optimize import minimize_scalar

    res = minimize_scalar(lambda x: -math.sqrt(4 - x * x) / (2 * math.pi), bounds=(-2, 2), method="bounded")
    assert -res.fun == pytest.approx(1 / math.pi, rel=1e-9)
    # the moment series sum C_k / 2^k diverges here, so only the density bound is reported
    assert out["gen_bound"] is None


def test_generating_bound_lebesgue():
    out = operator_norm_bounds(Lebesgue01(), 2)
    oracle, _ = integrate.quad(lambda x: 1 / (1 - x * x / 2), 0, 1, epsabs=1e-15)
    assert out["gen_bound"] == pytest.approx(oracle, rel=1e-13)
    partial = math.fsum(0.5**k / (2 * k + 1) for k in range(401))
    assert out["partial_sum"] == pytest.approx(partial, rel=1e-15)
    assert out["certificate_ratio"] == 0.5
    assert out["tpi_bound"] == pytest.approx(2 * math.pi)


def test_generating_bound_dirac():
    out = operator_norm_bounds(Dirac(1), 2)
    assert out["gen_bound"] == pytest.approx(2, abs=1e-14)
    assert out["tpi_bound"] is None


def test_tpi_bound_dominates_hilbert_norm():
    top = truncated_spectrum(Lebesgue01(), WeightScheme.unweighted(), 64).top
    out = operator_norm_bounds(Lebesgue01(), 1)
    assert out["gen_bound"] is None
    assert top < out["tpi_bound"] == pytest.approx(math.pi)


def test_generating_bound_cantor_equilibrium():
    from momentforge.ifs import cantor_ifs, solve_equilibrium_moments
    from momentforge.measures import IFSEquilibrium

    out = operator_norm_bounds(IFSEquilibrium(cantor_ifs()), 2, terms=60)
    m = solve_equilibrium_moments(cantor_ifs(), 120)
    assert out["gen_bound"] == pytest.approx(math.fsum(float(m[2 * k]) / 2**k for k in range(61)), rel=1e-14)


def test_outside_radius():
    with pytest.raises(OutsideRadius):
        operator_norm_bounds(ExpDecay(), 2)
    with pytest.raises(OutsideRadius):
        operator_norm_bounds(Dirac(2), 2)


def test_hs_trace_examples():
    assert hs_trace(0, 0, 10)["partial_trace"] == 1
    out = hs_trace(F(1, 5), F(1, 5), 50)
    assert out["partial_trace"] <= out["bound"] * (1 + 1e-14)
    assert out["bound"] == pytest.approx(math.sqrt(25 / 21), rel=1e-15)
    assert out["tail"] >= 0
    with pytest.raises(BoundNotApplicable):
        hs_trace(0.2, 0.3, 10)
    with pytest.raises(BoundNotApplicable):
        hs_trace(0.2, 0.1, 10)


def test_hs_trace_against_matrix_product():
    from momentforge.ifs import AffineMap, encode_affine

    c, b, n = F(1, 10), F(1, 5), 30
    A = np.array(encode_affine(AffineMap(c, b), n).A, dtype=float)
    out = hs_trace(c, b, n)
    assert out["partial_trace"] == pytest.approx(np.trace(A.T @ A), rel=1e-13)
    assert out["partial_trace"] <= out["bound"]
