"""Catalog of probability measures with closed-form moments.

Every closed form here has an independent numerical check: composite
Gauss-Legendre quadrature for the absolutely continuous models and Monte Carlo
sampling for everything that can be sampled directly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    IndexOverflow,
    NegativeOrder,
    SpecParseError,
    UnsupportedModel,
)
from .linalg import HankelMatrix, as_matrix, is_exact, to_scalar

__all__ = [
    "Dirac",
    "DiracMixture",
    "ExpDecay",
    "Gaussian",
    "HalfSecant",
    "IFSEquilibrium",
    "Lebesgue01",
    "MeasureModel",
    "MomentValue",
    "Secant",
    "Semicircle",
    "absolute_moment",
    "catalan",
    "central_binomial",
    "complex_dirac_moment_matrix",
    "discretize",
    "expectation",
    "moment",
    "moment_matrix",
    "parse_model",
    "pdc_check",
    "quadrature_moment",
    "sample",
]

GL_ORDER = 16


def catalan(k: int) -> int:
    return math.comb(2 * k, k) // (k + 1)


def central_binomial(k: int) -> int:
    return math.comb(2 * k, k)


@dataclass(frozen=True)
class MomentValue:
    """A moment with an optional exact form ``exact * pi**(-pi_power)``."""

    approx: float
    exact: Fraction | None = None
    pi_power: int = 0

    def __float__(self):
        return self.approx

    @property
    def is_rational(self) -> bool:
        return self.exact is not None and self.pi_power == 0

    @classmethod
    def of(cls, exact, pi_power: int = 0) -> "MomentValue":
        if is_exact(exact):
            exact = Fraction(exact)
            approx = float(exact) / math.pi**pi_power if pi_power else float(exact)
            return cls(approx=approx, exact=exact, pi_power=pi_power)
        return cls(approx=float(exact))


# ---------------------------------------------------------------- models

class MeasureModel:
    """Base class.  Subclasses are frozen dataclasses and therefore immutable."""

    kind = "abstract"
    absolutely_continuous = False

    def spec(self) -> str:
        return self.kind


@dataclass(frozen=True)
class Lebesgue01(MeasureModel):
    kind = "lebesgue01"
    absolutely_continuous = True


@dataclass(frozen=True)
class Dirac(MeasureModel):
    b: object = Fraction(0)
    kind = "dirac"

    def __post_init__(self):
        object.__setattr__(self, "b", to_scalar(self.b))

    def spec(self):
        return f"dirac:b={_fmt(self.b)}"


@dataclass(frozen=True)
class DiracMixture(MeasureModel):
    """Finite convex combination of point masses; ``atoms`` holds (x_i, alpha_i)."""

    atoms: tuple = ()
    kind = "mix"

    def __post_init__(self):
        atoms = tuple((to_scalar(x), to_scalar(a)) for x, a in self.atoms)
        if not atoms:
            raise ValueError("a Dirac mixture needs at least one atom")
        xs = [x for x, _ in atoms]
        if len(set(xs)) != len(xs):
            raise ValueError("atoms must be distinct")
        if any(a < 0 for _, a in atoms):
            raise ValueError("atom weights must be nonnegative")
        total = sum(a for _, a in atoms)
        ok = total == 1 if all(is_exact(a) for _, a in atoms) else abs(total - 1) < 1e-12
        if not ok:
            raise ValueError(f"atom weights must sum to 1, got {total}")
        object.__setattr__(self, "atoms", atoms)

    def spec(self):
        return "mix:" + ",".join(f"{_fmt(x)}@{_fmt(a)}" for x, a in self.atoms)


@dataclass(frozen=True)
class ExpDecay(MeasureModel):
    """e^{-x} dx on (0, inf)."""

    kind = "expdecay"
    absolutely_continuous = True


@dataclass(frozen=True)
class Gaussian(MeasureModel):
    """e^{-p^2 x^2} dx rescaled by its mass sqrt(pi)/p to a probability measure."""

    p: object = Fraction(1)
    kind = "gaussian"
    absolutely_continuous = True

    def __post_init__(self):
        p = to_scalar(self.p)
        if p <= 0:
            raise ValueError("Gaussian parameter p must be positive")
        object.__setattr__(self, "p", p)

    @property
    def mass_unnormalized(self) -> float:
        return math.sqrt(math.pi) / float(self.p)

    def spec(self):
        return f"gaussian:p={_fmt(self.p)}"


@dataclass(frozen=True)
class Semicircle(MeasureModel):
    """sqrt(4 - x^2) / (2 pi) dx on (-2, 2)."""

    kind = "semicircle"
    absolutely_continuous = True


@dataclass(frozen=True)
class Secant(MeasureModel):
    """dx / (pi sqrt(4 - x^2)) on (-2, 2)."""

    kind = "secant"
    absolutely_continuous = True


@dataclass(frozen=True)
class HalfSecant(MeasureModel):
    """2 dx / (pi sqrt(4 - x^2)) on (0, 2)."""

    kind = "halfsecant"
    absolutely_continuous = True


@dataclass(frozen=True)
class IFSEquilibrium(MeasureModel):
    ifs: object = None
    kind = "ifs"

    def spec(self):
        return self.ifs.spec()


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return repr(x)


# ---------------------------------------------------------------- moments

def moment(model: MeasureModel, k: int) -> MomentValue:
    """k-th moment of ``model``; exact whenever the closed form is rational (or rational/pi)."""
    if k < 0:
        raise NegativeOrder(f"moment order must be >= 0, got {k}")
    if isinstance(model, Lebesgue01):
        return MomentValue.of(Fraction(1, k + 1))
    if isinstance(model, Dirac):
        return MomentValue.of(model.b**k) if is_exact(model.b) else MomentValue(float(model.b) ** k)
    if isinstance(model, DiracMixture):
        s = sum(a * x**k for x, a in model.atoms)
        return MomentValue.of(s) if is_exact(s) else MomentValue(float(s))
    if isinstance(model, ExpDecay):
        return MomentValue.of(math.factorial(k))
    if isinstance(model, Semicircle):
        return MomentValue.of(catalan(k // 2) if k % 2 == 0 else 0)
    if isinstance(model, Secant):
        return MomentValue.of(central_binomial(k // 2) if k % 2 == 0 else 0)
    if isinstance(model, HalfSecant):
        if k % 2 == 0:
            return MomentValue.of(central_binomial(k // 2))
        j = (k - 1) // 2
        # integral of (2 sin t)^(2j+1) against 2 dt/pi over (0, pi/2)
        return MomentValue.of(Fraction(4 ** (2 * j + 1), (j + 1) * math.comb(2 * j + 1, j)), 1)
    if isinstance(model, Gaussian):
        if k % 2:
            return MomentValue.of(0)
        j = k // 2
        # Gamma(j + 1/2) / sqrt(pi) = (2j-1)!! / 2^j
        dfact = math.prod(range(1, 2 * j, 2))
        if is_exact(model.p):
            return MomentValue.of(Fraction(dfact, 2**j) / model.p ** (2 * j))
        return MomentValue(dfact / 2.0**j / float(model.p) ** (2 * j))
    if isinstance(model, IFSEquilibrium):
        from .ifs import solve_equilibrium_moments

        m = solve_equilibrium_moments(model.ifs, k)[k]
        return MomentValue.of(m) if is_exact(m) else MomentValue(float(m))
    raise UnsupportedModel(f"no closed-form moments for {model!r}")


def absolute_moment(model: MeasureModel, k: int) -> float:
    """Absolute moment, the integral of |x|^k."""
    if k < 0:
        raise NegativeOrder(f"moment order must be >= 0, got {k}")
    if isinstance(model, (Lebesgue01, ExpDecay, HalfSecant)) or k % 2 == 0 and not isinstance(
        model, (Dirac, DiracMixture)
    ):
        return moment(model, k).approx
    if isinstance(model, Dirac):
        return abs(complex(model.b)) ** k
    if isinstance(model, DiracMixture):
        return float(sum(float(a) * abs(complex(x)) ** k for x, a in model.atoms))
    if isinstance(model, Secant):
        return moment(HalfSecant(), k).approx
    if isinstance(model, Semicircle):
        # (2^(k+2)/pi) * int_0^{pi/2} sin^k cos^2 = (2^(k+1)/pi) * B((k+1)/2, 3/2)
        return 2.0 ** (k + 1) / math.pi * math.exp(
            math.lgamma((k + 1) / 2) + math.lgamma(1.5) - math.lgamma(k / 2 + 2)
        )
    if isinstance(model, Gaussian):
        return math.exp(math.lgamma((k + 1) / 2)) / math.sqrt(math.pi) / float(model.p) ** k
    if isinstance(model, IFSEquilibrium):
        x, w = discretize(model, panels=0)
        return float(np.sum(w * np.abs(x) ** k))
    raise UnsupportedModel(f"no absolute moments for {model!r}")


def moment_matrix(model: MeasureModel, n: int, exact: bool | None = None) -> HankelMatrix:
    """Order-``n`` moment matrix.  Exact when every m_k (k <= 2n) is rational."""
    if n < 0:
        raise NegativeOrder("order must be >= 0")
    vals = [moment(model, k) for k in range(2 * n + 1)]
    rational = all(v.is_rational for v in vals)
    if exact is None:
        exact = rational
    if exact and not rational:
        raise UnsupportedModel(f"{model.spec()} has irrational moments below order {2 * n}")
    return HankelMatrix(tuple(v.exact if exact else v.approx for v in vals))


# ---------------------------------------------------------------- quadrature

def _gl_panels(a: float, b: float, panels: int, order: int = GL_ORDER):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def _ac_rule(model: MeasureModel, panels: int, degree: int = 20):
    """Nodes and weights with sum(w f(x)) ~ integral of f against ``model``.

    The square-root endpoint singularities of the semicircle and (half-)secant
    densities disappear under x = 2 sin(theta).
    """
    if isinstance(model, Lebesgue01):
        return _gl_panels(0.0, 1.0, panels)
    if isinstance(model, Semicircle):
        t, w = _gl_panels(-math.pi / 2, math.pi / 2, panels)
        return 2 * np.sin(t), w * 2 * np.cos(t) ** 2 / math.pi
    if isinstance(model, Secant):
        t, w = _gl_panels(-math.pi / 2, math.pi / 2, panels)
        return 2 * np.sin(t), w / math.pi
    if isinstance(model, HalfSecant):
        t, w = _gl_panels(0.0, math.pi / 2, panels)
        return 2 * np.sin(t), 2 * w / math.pi
    if isinstance(model, ExpDecay):
        x, w = _gl_panels(0.0, 60.0 + 3.0 * degree, panels)
        return x, w * np.exp(-x)
    if isinstance(model, Gaussian):
        p = float(model.p)
        half_width = (math.sqrt(degree) + 8.0) / p
        x, w = _gl_panels(-half_width, half_width, panels)
        return x, w * p / math.sqrt(math.pi) * np.exp(-((p * x) ** 2))
    raise UnsupportedModel(f"quadrature is only available for densities, not {model.spec()}")


def discretize(model: MeasureModel, panels: int = 64, degree: int = 20):
    """Nodes/weights representing ``model``: atoms for Dirac kinds, quadrature otherwise."""
    if isinstance(model, Dirac):
        return np.array([complex(model.b).real]), np.array([1.0])
    if isinstance(model, DiracMixture):
        return (
            np.array([float(x) for x, _ in model.atoms]),
            np.array([float(a) for _, a in model.atoms]),
        )
    if isinstance(model, IFSEquilibrium):
        raise UnsupportedModel("IFS equilibrium measures have no quadrature rule here")
    return _ac_rule(model, panels, degree)


def expectation(model: MeasureModel, f, panels: int = 64, degree: int = 20,
                rtol: float = 1e-12, max_panels: int = 1 << 14) -> float:
    """Integral of ``f`` against ``model``, doubling panels until two passes agree."""
    if not model.absolutely_continuous:
        raise UnsupportedModel(f"quadrature needs a density, not {model.spec()}")
    x, w = _ac_rule(model, panels, degree)
    prev = float(np.sum(w * f(x)))
    while panels < max_panels:
        panels *= 2
        x, w = _ac_rule(model, panels, degree)
        cur = float(np.sum(w * f(x)))
        if abs(cur - prev) <= rtol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


def quadrature_moment(model: MeasureModel, k: int, panels: int = 64) -> float:
    if k < 0:
        raise NegativeOrder(f"moment order must be >= 0, got {k}")
    if not model.absolutely_continuous:
        raise UnsupportedModel(f"quadrature_moment needs a density, not {model.spec()}")
    return expectation(model, lambda x: x**k, panels=panels, degree=k)


# ---------------------------------------------------------------- sampling

def sample(model: MeasureModel, rng: np.random.Generator, size=None):
    """Draw from ``model`` with a caller-owned generator; scalar when ``size`` is None."""
    shape = () if size is None else size
    if isinstance(model, Dirac):
        out = np.full(shape, float(complex(model.b).real))
    elif isinstance(model, DiracMixture):
        xs = np.array([float(x) for x, _ in model.atoms])
        ps = np.array([float(a) for _, a in model.atoms])
        out = xs[rng.choice(len(xs), size=shape, p=ps / ps.sum())]
    elif isinstance(model, Lebesgue01):
        out = rng.random(shape)
    elif isinstance(model, ExpDecay):
        out = -np.log1p(-rng.random(shape))
    elif isinstance(model, Secant):
        # arcsine law on (-2, 2) by inverse CDF
        out = 2.0 * np.sin(math.pi * (rng.random(shape) - 0.5))
    elif isinstance(model, HalfSecant):
        out = 2.0 * np.sin(0.5 * math.pi * rng.random(shape))
    elif isinstance(model, Semicircle):
        out = _semicircle_rejection(rng, int(np.prod(shape)) if shape != () else 1)
        out = out.reshape(shape) if shape != () else out[0]
    elif isinstance(model, Gaussian):
        u1 = 1.0 - rng.random(shape)
        u2 = rng.random(shape)
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        out = z / (math.sqrt(2.0) * float(model.p))
    else:
        raise UnsupportedModel(f"cannot sample {model.spec()} directly")
    return float(out) if size is None else out


def _semicircle_rejection(rng, count: int) -> np.ndarray:
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = int(need * 1.4) + 16
        x = rng.uniform(-2.0, 2.0, batch)
        y = rng.uniform(0.0, 1.0, batch)
        keep = x[y * 2.0 <= np.sqrt(4.0 - x * x)][:need]
        out[filled : filled + keep.size] = keep
        filled += keep.size
    return out


# ---------------------------------------------------------------- complex

def complex_dirac_moment_matrix(xi, n: int) -> np.ndarray:
    """Hermitian matrix conj(xi)^j xi^k of the point mass at ``xi`` in the plane."""
    xi = to_scalar(xi)
    if is_exact(xi):
        out = np.empty((n + 1, n + 1), dtype=object)
        for j in range(n + 1):
            for k in range(n + 1):
                out[j, k] = xi ** (j + k)
        return out
    xi = complex(xi)
    powers = xi ** np.arange(n + 1)
    return np.outer(powers.conj(), powers)


@dataclass(frozen=True)
class PDCVerdict:
    passed: bool
    violation: np.ndarray | None = None
    value: float | None = None

    def __bool__(self):
        return self.passed


def pdc_check(M, n: int, trials: int = 100, rng: np.random.Generator | None = None,
              tol: float = 1e-10) -> PDCVerdict:
    """Probe the doubly indexed positivity condition on ``M``.

    Tests the quadratic form sum conj(c[i,j]) M[i+l, j+k] c[k,l] over the unit
    vectors e_{k,l} first and then ``trials`` random complex ``c`` supported on
    indices <= n.  Returns the first violating ``c`` found.
    """
    A = as_matrix(M)
    A = A.astype(complex) if A.dtype == object else A.astype(complex)
    if A.shape[0] < 2 * n + 1 or A.shape[1] < 2 * n + 1:
        raise IndexOverflow(f"need entries up to index {2 * n}, matrix is {A.shape}")
    idx = [(i, j) for i in range(n + 1) for j in range(n + 1)]
    K = np.empty((len(idx), len(idx)), dtype=complex)
    for r, (i, j) in enumerate(idx):
        for s, (k, l) in enumerate(idx):
            K[r, s] = A[i + l, j + k]
    scale = max(1.0, float(np.max(np.abs(K))))

    def form(c):
        return float(np.real(np.vdot(c, K @ c)))

    for r in range(len(idx)):
        c = np.zeros(len(idx), dtype=complex)
        c[r] = 1.0
        v = form(c)
        if v < -tol * scale:
            return PDCVerdict(False, c.reshape(n + 1, n + 1), v)
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(trials):
        c = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
        v = form(c)
        if v < -tol * scale * float(np.vdot(c, c).real):
            return PDCVerdict(False, c.reshape(n + 1, n + 1), v)
    return PDCVerdict(True)


# ---------------------------------------------------------------- spec strings

_SIMPLE = {
    "lebesgue01": Lebesgue01,
    "expdecay": ExpDecay,
    "semicircle": Semicircle,
    "secant": Secant,
    "halfsecant": HalfSecant,
}


def _parse_number(tok: str, text: str, offset: int):
    try:
        return to_scalar(tok)
    except (ValueError, ZeroDivisionError):
        raise SpecParseError(f"bad number in {text!r}", token=tok, position=offset) from None


def parse_model(text: str) -> MeasureModel:
    """Parse ``lebesgue01``, ``dirac:b=1/2``, ``mix:0@1/2,1@1/2``, ``gaussian:p=1``,
    ``semicircle``, ``secant``, ``halfsecant``, ``expdecay`` or ``ifs:...``."""
    s = text.strip()
    head, _, rest = s.partition(":")
    head_l = head.lower()
    body_at = len(head) + 1
    if head_l in _SIMPLE:
        if rest:
            raise SpecParseError(f"{head} takes no parameters", token=rest, position=body_at)
        return _SIMPLE[head_l]()
    if head_l in ("dirac", "gaussian"):
        key = "b" if head_l == "dirac" else "p"
        m = re.fullmatch(rf"\s*{key}\s*=\s*(\S+)\s*", rest)
        if not m:
            raise SpecParseError(f"expected {key}=<number> after {head}:", token=rest or "<empty>",
                                 position=body_at)
        val = _parse_number(m.group(1), s, body_at + m.start(1))
        try:
            return Dirac(val) if head_l == "dirac" else Gaussian(val)
        except ValueError as exc:
            raise SpecParseError(str(exc), token=m.group(1), position=body_at + m.start(1)) from None
    if head_l == "mix":
        atoms, pos = [], body_at
        for part in rest.split(","):
            if "@" not in part:
                raise SpecParseError("mixture atoms look like x@weight", token=part, position=pos)
            x_tok, w_tok = part.split("@", 1)
            atoms.append((_parse_number(x_tok, s, pos),
                          _parse_number(w_tok, s, pos + len(x_tok) + 1)))
            pos += len(part) + 1
        try:
            return DiracMixture(tuple(atoms))
        except ValueError as exc:
            raise SpecParseError(str(exc), token=rest, position=body_at) from None
    if head_l == "ifs":
        from .ifs import parse_ifs

        return IFSEquilibrium(parse_ifs(s))
    raise SpecParseError("unknown model", token=head, position=0)
