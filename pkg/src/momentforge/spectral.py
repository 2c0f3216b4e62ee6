"""Spectra of weighted moment matrices and of the matching integral kernels.

With weights w_k the weighted matrix H = D^{-1/2} M D^{-1/2}, D = diag(w), is
F^* F for the map F sending a sequence c to sum_k c_k x^k / sqrt(w_k) in
L^2(mu).  F F^* is the integral operator with kernel sum_j (x y)^j / w_j, and
the two share their nonzero spectrum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    BoundNotApplicable,
    NonpositiveWeight,
    OutOfRange,
    OutsideRadius,
    SeriesDivergent,
    SpecParseError,
)
from .linalg import (
    SpectrumReport,
    as_matrix,
    is_exact,
    rational_sqrt,
    sym_eig,
    to_scalar,
)
from .measures import (
    Dirac,
    DiracMixture,
    HalfSecant,
    IFSEquilibrium,
    Lebesgue01,
    MeasureModel,
    Secant,
    Semicircle,
    absolute_moment,
    central_binomial,
    discretize,
    moment,
    moment_matrix,
)

__all__ = [
    "WeightScheme",
    "closed_form_two_atom_spectrum",
    "hs_trace",
    "nystrom_kernel_spectrum",
    "operator_norm_bounds",
    "parse_weights",
    "truncated_spectrum",
    "weighted_kato_matrix",
]

KERNEL_TAIL_TOL = 1e-16
MAX_SERIES_TERMS = 20000


@dataclass(frozen=True)
class WeightScheme:
    """Positive weights w_0, w_1, ...

    kinds: ``unweighted`` (all 1), ``absmoment`` ((1+k^2) times the squared
    absolute moment of ``model``), ``geom`` (t^(2k)), ``pow2`` (1, 1, 2, 4, ...),
    ``custom`` (explicit array or callable k -> w_k).
    """

    kind: str = "unweighted"
    t: object = None
    model: MeasureModel | None = None
    values: object = None

    @classmethod
    def unweighted(cls):
        return cls("unweighted")

    @classmethod
    def geometric(cls, t):
        return cls("geom", t=to_scalar(t))

    @classmethod
    def powers_of_two(cls):
        return cls("pow2")

    @classmethod
    def absolute_moment(cls, model):
        return cls("absmoment", model=model)

    @classmethod
    def custom(cls, values):
        if not callable(values):
            values = tuple(to_scalar(v) for v in values)
        return cls("custom", values=values)

    @classmethod
    def factorial_squares(cls):
        """w_k = ((2k)!)^2, strong enough to tame the factorial moments of e^{-x} dx."""
        return cls("custom", values=lambda k: Fraction(math.factorial(2 * k) ** 2))

    def weight(self, k: int):
        if self.kind == "unweighted":
            return Fraction(1)
        if self.kind == "geom":
            return self.t ** (2 * k)
        if self.kind == "pow2":
            return Fraction(1) if k == 0 else Fraction(2) ** (k - 1)
        if self.kind == "absmoment":
            return (1 + k * k) * absolute_moment(self.model, k) ** 2
        if self.kind == "custom":
            if callable(self.values):
                return to_scalar(self.values(k))
            if k >= len(self.values):
                raise NonpositiveWeight(f"custom weights stop at index {len(self.values) - 1}")
            return self.values[k]
        raise ValueError(f"unknown weight kind {self.kind!r}")

    def weights(self, n: int) -> list:
        out = [self.weight(k) for k in range(n + 1)]
        for k, w in enumerate(out):
            if not w > 0:
                raise NonpositiveWeight(f"weight w_{k} = {w} is not positive")
        return out

    def tail_sum(self, n: int):
        """T_n = sum_{k=1}^n 1/w_k."""
        return sum(1 / w for w in self.weights(n)[1:])

    def spec(self) -> str:
        if self.kind == "geom":
            return f"geom:{self.t}"
        if self.kind == "custom" and not callable(self.values):
            return "custom:" + ",".join(str(v) for v in self.values)
        return self.kind


def parse_weights(text: str, model: MeasureModel | None = None) -> WeightScheme:
    """``unweighted | absmoment | geom:t | pow2 | factsq | custom:w0,w1,...``"""
    s = text.strip()
    head, _, rest = s.partition(":")
    head = head.lower()
    if head in ("unweighted", "pow2", "absmoment", "factsq") and rest:
        raise SpecParseError(f"{head} takes no parameters", token=rest, position=len(head) + 1)
    if head == "unweighted":
        return WeightScheme.unweighted()
    if head == "pow2":
        return WeightScheme.powers_of_two()
    if head == "factsq":
        return WeightScheme.factorial_squares()
    if head == "absmoment":
        if model is None:
            raise SpecParseError("absmoment weights need a model", token=head, position=0)
        return WeightScheme.absolute_moment(model)
    if head == "geom":
        try:
            t = to_scalar(rest)
        except (ValueError, ZeroDivisionError):
            raise SpecParseError("bad geometric ratio", token=rest, position=5) from None
        if t <= 0:
            raise SpecParseError("geometric ratio must be positive", token=rest, position=5)
        return WeightScheme.geometric(t)
    if head == "custom":
        vals, pos = [], len(head) + 1
        for tok in rest.split(","):
            try:
                vals.append(to_scalar(tok))
            except (ValueError, ZeroDivisionError):
                raise SpecParseError("bad custom weight", token=tok, position=pos) from None
            pos += len(tok) + 1
        return WeightScheme.custom(vals)
    raise SpecParseError("unknown weight scheme", token=head, position=0)


def _as_scheme(w) -> WeightScheme:
    return w if isinstance(w, WeightScheme) else WeightScheme.custom(w)


def weighted_kato_matrix(M, w) -> np.ndarray:
    """H[i, j] = M[i, j] / sqrt(w_i w_j); exact when every sqrt(w_k) is rational."""
    A = as_matrix(M)
    n1 = A.shape[0]
    ws = _as_scheme(w).weights(n1 - 1)
    roots = [rational_sqrt(v) if is_exact(v) else math.sqrt(v) for v in ws]
    if A.dtype == object and all(is_exact(r) for r in roots):
        out = np.empty_like(A)
        for i in range(n1):
            for j in range(n1):
                out[i, j] = A[i, j] / (roots[i] * roots[j])
        return out
    r = np.array([float(v) for v in roots])
    return np.array(A, dtype=float) / np.outer(r, r)


def closed_form_two_atom_spectrum(kind: str, value) -> dict:
    """Nonzero eigenvalues of the two-atom weighted moment operators.

    ``zero_one``: (delta_0 + delta_1)/2 with any weights, w_0 = 1 and T = sum_{k>=1} 1/w_k.
    ``zero_b``: (delta_0 + delta_b)/2 unweighted, 0 < b < 1.

    Each eigenvector is (alpha, g_1, g_2, ...) with g_k = w_k^{-1/2} for
    ``zero_one`` and g_k = b^k for ``zero_b``.
    """
    value = float(value)
    if kind == "zero_one":
        if not value > 0:
            raise OutOfRange(f"T must be positive, got {value}")
        T = value
    elif kind == "zero_b":
        if not 0 < value < 1:
            raise OutOfRange(f"b must lie in (0, 1), got {value}")
        T = value * value / (1 - value * value)
    else:
        raise OutOfRange(f"unknown two-atom family {kind!r}")
    half = T / 2
    root = math.sqrt(half * half + 1)
    lam_p = 0.5 * (1 + half + root)
    lam_m = 0.5 * (1 + half - root)
    # smaller root through the product, avoiding cancellation when T is tiny
    lam_m = (T / 4) / lam_p if lam_m < 0.25 else lam_m
    return {
        "kind": kind,
        "T": T,
        "lambda_plus": lam_p,
        "lambda_minus": lam_m,
        "alpha_plus": 1 - half + root,
        "alpha_minus": 1 - half - root,
    }


def _model_label(model) -> str:
    return model.spec() if isinstance(model, MeasureModel) else str(model)


def truncated_spectrum(model: MeasureModel, w, n: int, tol: float = 1e-12) -> SpectrumReport:
    """Eigen-decomposition of the order-n weighted moment matrix (float mode)."""
    scheme = _as_scheme(w)
    M = moment_matrix(model, n, exact=False).to_array()
    H = weighted_kato_matrix(M, scheme)
    rep = sym_eig(H, tol=tol)
    rep.meta.update({"model": _model_label(model), "weights": scheme.spec(), "n": n})
    return rep


def _support_radius(model) -> float:
    if isinstance(model, Dirac):
        return abs(complex(model.b))
    if isinstance(model, DiracMixture):
        return max(abs(complex(x)) for x, _ in model.atoms)
    if isinstance(model, Lebesgue01):
        return 1.0
    if isinstance(model, (Semicircle, Secant, HalfSecant)):
        return 2.0
    if isinstance(model, IFSEquilibrium):
        # the attractor lies in the smallest centred interval mapped into itself
        return max(abs(float(t.b)) / (1 - abs(float(t.c))) for t in model.ifs.maps)
    return math.inf


def _auto_terms(radius: float, scheme: WeightScheme) -> int:
    """Smallest J with radius^(2J) / w_J below the tail tolerance."""
    for j in range(1, MAX_SERIES_TERMS):
        w = float(scheme.weight(j))
        if w > 0 and (radius ** (2 * j)) / w < KERNEL_TAIL_TOL:
            return j
        if math.isinf(radius):
            break
    raise SeriesDivergent(
        f"kernel series with {scheme.spec()} weights does not settle on support radius {radius}"
    )


def nystrom_kernel_spectrum(model: MeasureModel, w, quad_nodes: int = 128,
                            series_terms: int | None = None, tol: float = 1e-12) -> SpectrumReport:
    """Eigenvalues of the kernel operator on L^2(model), discretized on quadrature nodes.

    With ``series_terms=None`` the closed kernels 1/(1-xy) (unweighted) and
    1/(1-xy/t^2) (geometric) are used, and other weights sum the series until
    the tail is negligible.  An explicit ``series_terms`` J sums j = 0..J-1,
    which makes the kernel matrix F F^* for the order J-1 truncation.
    """
    scheme = _as_scheme(w)
    x, a = discretize(model, panels=max(1, quad_nodes // 16))
    radius = _support_radius(model)
    X, Y = np.meshgrid(x, x, indexing="ij")
    P = X * Y
    if series_terms is None and scheme.kind in ("unweighted", "geom"):
        r2 = 1.0 if scheme.kind == "unweighted" else float(scheme.t) ** 2
        if radius * radius > r2 or (radius * radius == r2 and np.max(np.abs(P)) >= r2):
            raise SeriesDivergent(f"kernel 1/(1 - xy/{r2}) is singular on the support")
        K = 1.0 / (1.0 - P / r2)
    else:
        J = series_terms if series_terms is not None else _auto_terms(radius, scheme)
        ws = [float(v) for v in scheme.weights(J - 1)]
        K = np.zeros_like(P)
        pw = np.ones_like(P)
        for j in range(J):
            K += pw / ws[j]
            pw = pw * P
    s = np.sqrt(a)
    rep = sym_eig(s[:, None] * K * s[None, :], tol=tol)
    rep.meta.update({"model": _model_label(model), "weights": scheme.spec(),
                     "n": len(x), "nodes": len(x)})
    return rep


# ---------------------------------------------------------------- bounds

def _sup_density(model):
    """(sup of the density, support half-width needed) or None when unbounded."""
    if isinstance(model, Lebesgue01):
        return 1.0, 1.0
    if isinstance(model, Semicircle):
        return 1.0 / math.pi, 2.0
    return None


def operator_norm_bounds(model: MeasureModel, t: float, terms: int = 400) -> dict:
    """Partial sum of sum_k m_2k t^{-k} with a geometric tail, and t pi sup(density).

    On a support inside [-r, r] each term is at most r^2/t times the previous
    one, which certifies the tail.  When that ratio is >= 1 but the density
    bound applies, ``gen_bound`` is None; with neither bound OutsideRadius is
    raised.
    """
    t = float(t)
    if t <= 0:
        raise OutsideRadius("t must be positive")
    sup = _sup_density(model)
    tpi = t * math.pi * sup[0] if sup is not None and t >= sup[1] else None
    ratio = _support_radius(model) ** 2 / t
    out = {"gen_bound": None, "partial_sum": None, "tail_bound": None,
           "certificate_ratio": ratio, "tpi_bound": tpi}
    if ratio >= 1:
        if tpi is None:
            raise OutsideRadius(f"1/t = {1 / t} lies outside the radius of convergence (ratio {ratio:.4g})")
        return out
    terms_vals = [moment(model, 2 * k).approx / t**k for k in range(terms + 1)]
    partial = math.fsum(terms_vals)
    tail = terms_vals[-1] * ratio / (1 - ratio)
    out.update({"gen_bound": partial + tail, "partial_sum": partial, "tail_bound": tail})
    return out


def hs_trace(c, b, n: int) -> dict:
    """Partial trace of A^* A for tau(z) = c z + b and its central-binomial bound."""
    ac, ab = abs(complex(to_scalar(c))), abs(complex(to_scalar(b)))
    if ab >= 0.25:
        raise BoundNotApplicable(f"|b| = {ab} must be < 1/4")
    if ac > ab:
        raise BoundNotApplicable(f"|c| = {ac} must not exceed |b| = {ab}")
    c2, b2 = ac * ac, ab * ab
    diag = [
        math.fsum(math.comb(j, k) ** 2 * c2**k * b2 ** (j - k) for k in range(j + 1))
        for j in range(n + 1)
    ]
    bound_partial = math.fsum(central_binomial(j) * b2**j for j in range(n + 1))
    limit = 1 / math.sqrt(1 - 4 * b2)
    return {
        "partial_trace": math.fsum(diag),
        "bound_partial": bound_partial,
        "tail": max(limit - bound_partial, 0.0),
        "bound": max(limit, bound_partial),
    }
