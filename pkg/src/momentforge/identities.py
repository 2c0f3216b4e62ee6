"""Self-checking identities: a binomial sum, a density with vanishing moments,
and the self-similarity of the Hilbert matrix under the halving maps."""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .ifs import AffineMap, encode_affine
from .linalg import hilbert_matrix, triple_product

__all__ = [
    "binomial_identity",
    "hilbert_invariance",
    "identity_checks",
    "nonunique_density",
    "paper_identity_checks",
    "vanishing_moment",
]


def binomial_lhs(i: int, j: int) -> Fraction:
    return sum(
        Fraction(math.comb(i, k) * math.comb(j, l), 1 + k + l)
        for k in range(i + 1)
        for l in range(j + 1)
    )


def binomial_identity(limit: int = 12) -> dict:
    """sum_{k<=i, l<=j} C(i,k) C(j,l) / (1+k+l) against two candidate right-hand sides.

    The sum is the integral of (1+x)^i (1+x)^j over [0, 1], so it equals
    (2^(i+j+1) - 1)/(1+i+j).  The variant with 2^(i+j) is tested alongside.
    """
    rows = []
    first_fail_printed = None
    all_corrected = True
    for i in range(limit + 1):
        for j in range(limit + 1):
            lhs = binomial_lhs(i, j)
            printed = Fraction(2 ** (i + j) - 1, 1 + i + j)
            corrected = Fraction(2 ** (i + j + 1) - 1, 1 + i + j)
            all_corrected &= lhs == corrected
            if lhs != printed and first_fail_printed is None:
                first_fail_printed = (i, j)
            rows.append((i, j, lhs, printed, corrected))
    return {
        "rows": rows,
        "corrected_matches": all_corrected,
        "printed_first_failure": first_fail_printed,
    }


# ---------------------------------------------------------------- vanishing moments

def _phi_derivative(k: int, t: np.ndarray) -> np.ndarray:
    """k-th derivative (k >= 1) of phi(t) = -(t^2 + t^-2)."""
    if k == 1:
        return -2 * t + 2 * t**-3
    if k == 2:
        return -2 - 6 * t**-4
    return -((-1) ** k) * math.factorial(k + 1) * t ** -(k + 2)


def _g_derivatives(order: int, t: np.ndarray) -> list:
    """g, g', ..., g^(order) for g = exp(phi), via g^(n+1) = sum C(n,k) phi^(k+1) g^(n-k)."""
    phis = [None] + [_phi_derivative(k, t) for k in range(1, order + 1)]
    g = [np.exp(-(t * t + 1 / (t * t)))]
    for n in range(order):
        g.append(sum(math.comb(n, k) * phis[k + 1] * g[n - k] for k in range(n + 1)))
    return g


def _gl_nodes(a, b, panels, order=16):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def nonunique_density(x, t_range=(1e-2, 9.0), panels: int = 2000) -> np.ndarray:
    """f(x) = integral over R of cos(x t) exp(-(t^2 + 1/t^2)) dt, on a grid of x values."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t, w = _gl_nodes(*t_range, panels)
    g = np.exp(-(t * t + 1 / (t * t)))
    return 2.0 * (np.cos(np.outer(x, t)) @ (w * g))


def vanishing_moment(i: int, X: float = 1000.0, t_range=(1e-2, 9.0), panels: int = 8000) -> float:
    """Integral of x^i f(x) over [-X, X].

    Swapping the integrals and moving the 2m derivatives of cos(x t) in t onto
    g gives (-1)^m 4 * integral_0^inf g^(2m)(t) sin(X t)/t dt for i = 2m.  The
    boundary terms vanish because g is flat at 0 and decays at infinity, and
    odd i vanish by symmetry.  f itself decays like exp(-c x^(2/3)), so the
    mass beyond |x| = X is far below double precision.
    """
    if i % 2:
        return 0.0
    m = i // 2
    t, w = _gl_nodes(*t_range, panels)
    g2m = _g_derivatives(2 * m, t)[2 * m]
    return float((-1) ** m * 4.0 * np.sum(w * g2m * np.sin(X * t) / t))


# ---------------------------------------------------------------- Hilbert invariance

def hilbert_invariance(n: int) -> bool:
    """(A_0^* M A_0 + A_1^* M A_1)/2 == M exactly for the halving maps x/2, (x+1)/2."""
    M = hilbert_matrix(n)
    h = Fraction(1, 2)
    A0 = encode_affine(AffineMap(h, 0), n).A
    A1 = encode_affine(AffineMap(h, h), n).A
    R = (triple_product(A0, M, A0) + triple_product(A1, M, A1)) * h
    return bool((R == M).all())


# ---------------------------------------------------------------- report

def _frac(v) -> str:
    return f"{v.numerator}/{v.denominator}"


def identity_checks(limit: int = 12, max_n: int = 10, moment_order: int = 8,
                    moment_tol: float = 1e-6) -> dict:
    """Run the three checks and return a JSON-ready report."""
    items = []
    b = binomial_identity(limit)
    fail = b["printed_first_failure"]
    lhs00 = binomial_lhs(0, 0)
    items.append({
        "name": "binomial_identity",
        "status": "pass" if b["corrected_matches"] and fail is not None else "fail",
        "lhs": _frac(lhs00),
        "rhs_paper": _frac(Fraction(0)),
        "rhs_corrected": _frac(Fraction(1)),
        "summary": (
            f"corrected form matches for i,j <= {limit}, paper form fails at "
            f"({fail[0]},{fail[1]})" if fail is not None and b["corrected_matches"]
            else "corrected form does not match"
        ),
    })

    worst = {i: vanishing_moment(i) for i in range(moment_order + 1)}
    ok = all(abs(v) <= moment_tol for v in worst.values())
    items.append({
        "name": "vanishing_moments",
        "status": "pass" if ok else "fail",
        "lhs": {str(i): v for i, v in worst.items()},
        "rhs_paper": 0.0,
        "rhs_corrected": 0.0,
        "summary": f"max |int x^i f| for i <= {moment_order} is {max(abs(v) for v in worst.values()):.3e}",
    })

    inv = {n: hilbert_invariance(n) for n in range(max_n + 1)}
    items.append({
        "name": "hilbert_ifs_invariance",
        "status": "pass" if all(inv.values()) else "fail",
        "lhs": None,
        "rhs_paper": None,
        "rhs_corrected": None,
        "summary": f"exact for n <= {max_n}" if all(inv.values())
        else f"fails for n in {[n for n, v in inv.items() if not v]}",
    })
    return {"items": items, "passed": all(it["status"] == "pass" for it in items)}


# the operation name used in the published interface
paper_identity_checks = identity_checks


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True)
