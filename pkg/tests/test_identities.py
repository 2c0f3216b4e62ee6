import json
import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from scipy import integrate

from momentforge.identities import (
    binomial_identity,
    hilbert_invariance,
    identity_checks,
    nonunique_density,
    paper_identity_checks,
    report_json,
    vanishing_moment,
)
from momentforge.ifs import AffineMap, encode_affine
from momentforge.linalg import hilbert_matrix, triple_product


def test_binomial_examples():
    rows = {(i, j): (lhs, printed, corrected) for i, j, lhs, printed, corrected in binomial_identity(3)["rows"]}
    assert rows[(1, 0)] == (F(3, 2), F(1, 2), F(3, 2))
    assert rows[(0, 0)][:2] == (1, 0)


def test_binomial_report():
    b = binomial_identity(12)
    assert b["corrected_matches"]
    assert b["printed_first_failure"] == (0, 0)
    assert len(b["rows"]) == 13 * 13


def test_binomial_lhs_against_sympy_integral():
    x = sympy.Symbol("x")
    for i, j, lhs, _, _ in binomial_identity(5)["rows"]:
        val = sympy.integrate((1 + x) ** (i + j), (x, 0, 1))
        assert lhs == F(int(val.p), int(val.q))


def test_hilbert_invariance_entry():
    # (1,1) entry: half of (1/4 * 1/3 + X) must be 1/3, so the A_1 side contributes X = 7/12
    M = hilbert_matrix(1)
    h = F(1, 2)
    A1 = encode_affine(AffineMap(h, h), 1).A
    assert triple_product(A1, M, A1)[1, 1] == F(7, 12)
    assert all(hilbert_invariance(n) for n in range(11))


def test_hilbert_invariance_fails_for_other_matrices():
    # the Catalan Hankel matrix is not invariant under the halving maps
    from momentforge.measures import Semicircle, moment_matrix
    M = moment_matrix(Semicircle(), 3).to_array()
    h = F(1, 2)
    A0, A1 = encode_affine(AffineMap(h, 0), 3).A, encode_affine(AffineMap(h, h), 3).A
    assert not ((triple_product(A0, M, A0) + triple_product(A1, M, A1)) * h == M).all()


def test_density_matches_scipy():
    for x in (0.0, 0.7, 3.0, 12.0):
        ref, _ = integrate.quad(lambda t: 2 * math.cos(x * t) * math.exp(-(t * t + 1 / (t * t))), 0, 12,
                                limit=400, epsabs=1e-14)
        assert nonunique_density(x)[0] == pytest.approx(ref, abs=1e-12)


def test_density_is_not_zero():
    f = nonunique_density(np.linspace(-5, 5, 11))
    assert np.max(np.abs(f)) > 0.1
    assert np.allclose(f, f[::-1])


def test_low_moments_by_direct_quadrature():
    # an independent route: integrate x^i f(x) on a fine grid, |f| < 1e-15 beyond |x| = 200
    x = np.linspace(-200, 200, 40001)
    f = np.concatenate([nonunique_density(chunk, panels=400) for chunk in np.array_split(x, 40)])
    for i in (0, 2):
        assert abs(integrate.simpson(x**i * f, x=x)) <= 1e-6


@pytest.mark.parametrize("i", range(9))
def test_vanishing_moments(i):
    assert abs(vanishing_moment(i)) <= 1e-6


def test_report_shape():
    rep = identity_checks()
    assert rep["passed"]
    names = [it["name"] for it in rep["items"]]
    assert names == ["binomial_identity", "vanishing_moments", "hilbert_ifs_invariance"]
    for it in rep["items"]:
        assert set(it) >= {"name", "status", "lhs", "rhs_paper", "rhs_corrected"}
    b = rep["items"][0]
    assert (b["lhs"], b["rhs_paper"], b["rhs_corrected"]) == ("1/1", "0/1", "1/1")
    assert "fails at (0,0)" in b["summary"]
    assert paper_identity_checks is identity_checks
    assert json.loads(report_json(rep))["passed"] is True
