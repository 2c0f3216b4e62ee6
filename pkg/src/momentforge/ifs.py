"""Moment-matrix transformations under maps, and equilibrium measures of affine IFSs.

For a map tau with ``tau(x)^k = sum_i A[i, k] x^i`` the moment matrices of a
measure and its pushforward satisfy M' = A^* M A.  Affine maps give an upper
triangular A; the equilibrium measure of an affine IFS is then pinned down by a
triangular recursion on its moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numba
import numpy as np

from .errors import (
    BadCorner,
    DimensionMismatch,
    NotContractive,
    NotHankel,
    QuadratureUnavailable,
    RankDeficient,
    SpecParseError,
    ZeroDelta,
)
from .linalg import (
    as_matrix,
    inverse,
    is_exact,
    is_hankel,
    matrix_mode,
    to_scalar,
    triple_product,
)

__all__ = [
    "AffineIFS",
    "AffineMap",
    "ChaosGameResult",
    "EncodingMatrix",
    "SquarePlusB",
    "cantor_ifs",
    "chaos_game_moments",
    "dg_generators",
    "dg_inverse",
    "encode_affine",
    "encode_square_plus_b",
    "fixed_point_iterate",
    "lebesgue_ifs",
    "parse_ifs",
    "pushforward",
    "solve_equilibrium_moments",
    "transform_moment_matrix",
    "truncated_encoding",
]


@dataclass(frozen=True)
class AffineMap:
    """tau(x) = c x + b."""

    c: object
    b: object

    def __post_init__(self):
        object.__setattr__(self, "c", to_scalar(self.c))
        object.__setattr__(self, "b", to_scalar(self.b))

    def __call__(self, x):
        return self.c * x + self.b


@dataclass(frozen=True)
class SquarePlusB:
    """tau(x) = x^2 + b."""

    b: object

    def __post_init__(self):
        object.__setattr__(self, "b", to_scalar(self.b))

    def __call__(self, x):
        return x * x + self.b


@dataclass(frozen=True)
class AffineIFS:
    maps: tuple
    probs: tuple

    def __post_init__(self):
        maps = tuple(m if isinstance(m, AffineMap) else AffineMap(*m) for m in self.maps)
        probs = tuple(to_scalar(p) for p in self.probs)
        if not maps:
            raise ValueError("an IFS needs at least one map")
        if len(maps) != len(probs):
            raise DimensionMismatch(f"{len(maps)} maps but {len(probs)} probabilities")
        if any(p <= 0 for p in probs):
            raise ValueError("probabilities must be positive")
        total = sum(probs)
        if not (total == 1 if all(is_exact(p) for p in probs) else abs(total - 1) < 1e-12):
            raise ValueError(f"probabilities must sum to 1, got {total}")
        for m in maps:
            if abs(m.c) >= 1:
                raise NotContractive(f"map {m} has |c| >= 1")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "probs", probs)

    @property
    def exact(self) -> bool:
        return all(is_exact(m.c) and is_exact(m.b) for m in self.maps) and all(
            is_exact(p) for p in self.probs
        )

    def spec(self) -> str:
        return "ifs:" + ";".join(f"{m.c},{m.b}@{p}" for m, p in zip(self.maps, self.probs))


def cantor_ifs() -> AffineIFS:
    """Middle-thirds Cantor IFS, x/3 and (x+2)/3 with equal weights."""
    h, t = Fraction(1, 2), Fraction(1, 3)
    return AffineIFS((AffineMap(t, 0), AffineMap(t, Fraction(2, 3))), (h, h))


def lebesgue_ifs() -> AffineIFS:
    """x/2 and (x+1)/2 with equal weights; its equilibrium is Lebesgue measure on [0, 1]."""
    h = Fraction(1, 2)
    return AffineIFS((AffineMap(h, 0), AffineMap(h, h)), (h, h))


def parse_ifs(text: str) -> AffineIFS:
    """Parse ``ifs:c0,b0@p0;c1,b1@p1;...``."""
    s = text.strip()
    if not s.lower().startswith("ifs:"):
        raise SpecParseError("IFS spec must start with 'ifs:'", token=s[:4], position=0)
    pos = 4
    maps, probs = [], []
    for part in s[4:].split(";"):
        if not part.strip():
            raise SpecParseError("empty map in IFS spec", token=part, position=pos)
        if "@" not in part or "," not in part.split("@")[0]:
            raise SpecParseError("IFS maps look like c,b@p", token=part, position=pos)
        cb, p_tok = part.split("@", 1)
        c_tok, b_tok = cb.split(",", 1)
        vals = []
        offset = pos
        for tok in (c_tok, b_tok, p_tok):
            try:
                vals.append(to_scalar(tok))
            except (ValueError, ZeroDivisionError):
                raise SpecParseError("bad number in IFS spec", token=tok, position=offset) from None
            offset += len(tok) + 1
        maps.append(AffineMap(vals[0], vals[1]))
        probs.append(vals[2])
        pos += len(part) + 1
    try:
        return AffineIFS(tuple(maps), tuple(probs))
    except NotContractive:
        raise
    except ValueError as exc:
        raise SpecParseError(str(exc), token=s[4:], position=4) from None


# ---------------------------------------------------------------- encodings

@dataclass(frozen=True)
class EncodingMatrix:
    """Matrix whose column k holds the monomial coefficients of tau(x)^k."""

    A: np.ndarray
    source: str

    def __array__(self, dtype=None, copy=None):
        return self.A if dtype is None else self.A.astype(dtype)


def _mat(A) -> np.ndarray:
    return A.A if isinstance(A, EncodingMatrix) else as_matrix(A)


def _zeros(shape, exact: bool, complex_: bool = False) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=complex if complex_ else float)


def encode_affine(tau: AffineMap, n: int) -> EncodingMatrix:
    """Upper triangular A with A[i, j] = binom(j, i) c^i b^(j-i)."""
    c, b = tau.c, tau.b
    exact = is_exact(c) and is_exact(b)
    A = _zeros((n + 1, n + 1), exact, isinstance(c, complex) or isinstance(b, complex))
    for j in range(n + 1):
        for i in range(j + 1):
            A[i, j] = math.comb(j, i) * c**i * b ** (j - i)
    return EncodingMatrix(A, f"affine c={c} b={b}")


def encode_square_plus_b(b, n: int, rows: int | None = None) -> EncodingMatrix:
    """Columns 0..n hold the coefficients of (x^2 + b)^k.

    ``rows`` defaults to n+1; pass 2n+1 to keep every coefficient so that the
    intertwining A^* M A holds exactly against a moment matrix of order 2n.
    """
    b = to_scalar(b)
    rows = n + 1 if rows is None else rows
    A = _zeros((rows, n + 1), is_exact(b), isinstance(b, complex))
    for k in range(n + 1):
        for h in range(k + 1):
            if 2 * h < rows:
                A[2 * h, k] = math.comb(k, h) * b ** (k - h)
    return EncodingMatrix(A, f"x^2+{b}")


def transform_moment_matrix(A, M) -> np.ndarray:
    """A^* M A."""
    A = _mat(A)
    M = as_matrix(M)
    if M.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but M is {M.shape}")
    return triple_product(A, M, A)


def dg_generators(delta, gamma, n: int):
    """D = diag(delta^k) and G with G[i, j] = binom(j, i) gamma^(j-i)."""
    delta, gamma = to_scalar(delta), to_scalar(gamma)
    exact = is_exact(delta) and is_exact(gamma)
    D = _zeros((n + 1, n + 1), exact, isinstance(delta, complex))
    for k in range(n + 1):
        D[k, k] = delta**k
    G = encode_affine(AffineMap(1, gamma), n).A
    if not exact:
        G = G.astype(D.dtype) if G.dtype != object else np.array(G, dtype=float)
    return D, G


def dg_inverse(delta, gamma, n: int):
    """Inverses of the generators, D(1/delta) and G(-gamma)."""
    delta = to_scalar(delta)
    if delta == 0:
        raise ZeroDelta("D(0) is not invertible")
    return dg_generators(1 / delta, -to_scalar(gamma), n)


def pushforward(model, tau):
    """Image of a point mass or Dirac mixture under ``tau``."""
    from .measures import Dirac, DiracMixture

    if isinstance(model, Dirac):
        return Dirac(tau(model.b))
    if isinstance(model, DiracMixture):
        merged: dict = {}
        for x, a in model.atoms:
            y = tau(x)
            merged[y] = merged.get(y, 0) + a
        return DiracMixture(tuple(merged.items()))
    raise TypeError(f"pushforward is only implemented for atomic measures, not {model!r}")


# ---------------------------------------------------------------- equilibrium

def solve_equilibrium_moments(ifs: AffineIFS, N: int) -> list:
    """m_0..m_N of the equilibrium measure, in total-degree order.

    m_s (1 - sum_i p_i c_i^s) = sum_i p_i sum_{j<s} binom(s, j) b_i^(s-j) c_i^j m_j
    """
    for m in ifs.maps:
        if abs(m.c) >= 1:
            raise NotContractive(f"map {m} has |c| >= 1")
    one = Fraction(1) if ifs.exact else 1.0
    moments = [one]
    for s in range(1, N + 1):
        denom = one - sum(p * m.c**s for m, p in zip(ifs.maps, ifs.probs))
        acc = 0
        for m, p in zip(ifs.maps, ifs.probs):
            acc += p * sum(math.comb(s, j) * m.b ** (s - j) * m.c**j * moments[j] for j in range(s))
        moments.append(acc / denom)
    return moments


def _check_start(M0) -> np.ndarray:
    A = as_matrix(M0)
    exact = A.dtype == object
    if not is_hankel(A, 0.0 if exact else 1e-14):
        raise NotHankel("starting matrix is not Hankel")
    corner = A[0, 0]
    if (corner != 1) if exact else abs(corner - 1) > 1e-14:
        raise BadCorner(f"starting matrix has (0,0) entry {corner}, expected 1")
    return A


def fixed_point_iterate(ifs: AffineIFS, M0, n: int, iters: int = 200, tol: float = 1e-13) -> list:
    """Iterates of R(M) = sum_i p_i A_i^* M A_i, starting at ``M0`` (included).

    Stops once successive iterates agree entrywise to ``tol`` or after ``iters`` steps.
    """
    M = _check_start(M0)
    if M.shape[0] < n + 1:
        raise DimensionMismatch(f"order {n} needs a {n + 1}x{n + 1} start, got {M.shape}")
    M = M[: n + 1, : n + 1]
    encodings = [encode_affine(m, n).A for m in ifs.maps]
    probs = list(ifs.probs)
    if M.dtype != object or not ifs.exact:
        M = M.astype(float) if M.dtype == object else M
        encodings = [np.array(A, dtype=float) if A.dtype == object else A for A in encodings]
        probs = [float(p) for p in probs]
    out = [M]
    for _ in range(iters):
        nxt = sum(p * triple_product(A, M, A) for A, p in zip(encodings, probs))
        diff = max(abs(float(v)) for v in (nxt - M).ravel())
        out.append(nxt)
        M = nxt
        if diff < tol:
            break
    return out


@dataclass(frozen=True)
class ChaosGameResult:
    moments: np.ndarray
    stderr: np.ndarray
    samples: int
    batches: int


@numba.njit(cache=True)
def _orbit_batches(cs, bs, cum, u, burn, N, batches, batch_size):
    x = 0.0
    nmaps = cs.shape[0]
    out = np.zeros((batches, N + 1))
    t = 0
    for step in range(burn + batches * batch_size):
        r = u[step]
        i = 0
        while i < nmaps - 1 and r >= cum[i]:
            i += 1
        x = cs[i] * x + bs[i]
        if step >= burn:
            bi = (step - burn) // batch_size
            pw = 1.0
            for k in range(N + 1):
                out[bi, k] += pw
                pw *= x
            t += 1
    return out / batch_size


def chaos_game_moments(ifs: AffineIFS, N: int, samples: int, rng: np.random.Generator,
                       burn_in: int = 1000, batches: int = 1000) -> ChaosGameResult:
    """Orbit averages of x^0..x^N along one random orbit x <- tau_I(x).

    Consecutive orbit points are correlated, so the standard error comes from
    the spread of ``batches`` non-overlapping batch means.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    batches = max(1, min(batches, samples))
    batch_size = samples // batches
    used = batches * batch_size
    cs = np.array([float(m.c) for m in ifs.maps])
    bs = np.array([float(m.b) for m in ifs.maps])
    cum = np.cumsum([float(p) for p in ifs.probs])
    u = rng.random(burn_in + used)
    means = _orbit_batches(cs, bs, cum, u, burn_in, N, batches, batch_size)
    est = means.mean(axis=0)
    if batches > 1:
        se = means.std(axis=0, ddof=1) / math.sqrt(batches)
    else:
        se = np.full(N + 1, np.inf)
    se[0] = 0.0
    return ChaosGameResult(est, se, used, batches)


# ---------------------------------------------------------------- nonaffine

def _tau_power_products(model, tau, n: int):
    """C[i, k] = integral of x^i tau(x)^k, exact for atoms, quadrature otherwise."""
    from .measures import Dirac, DiracMixture, expectation

    if isinstance(model, (Dirac, DiracMixture)):
        atoms = [(model.b, Fraction(1))] if isinstance(model, Dirac) else list(model.atoms)
        vals = [[sum(a * x**i * tau(x) ** k for x, a in atoms) for k in range(n + 1)]
                for i in range(n + 1)]
        return as_matrix(np.array(vals, dtype=object))
    if not getattr(model, "absolutely_continuous", False):
        raise QuadratureUnavailable(f"no quadrature rule for {model.spec()}")
    C = np.empty((n + 1, n + 1))
    for i in range(n + 1):
        for k in range(n + 1):
            C[i, k] = expectation(model, lambda x, i=i, k=k: x**i * np.asarray(tau(x), float) ** k,
                                  degree=i + 2 * k)
    return C


def truncated_encoding(model, tau, n: int, return_factors: bool = False):
    """A~_n = R_n^{-1} T_n, the best order-n encoding of ``tau`` in L^2(model).

    R[j, k] = <p_j | x^k> and T[j, k] = <p_j | tau(x)^k> for the orthogonal
    polynomials p_j of ``model``.  Column k of the result holds the monomial
    coefficients of the orthogonal projection of tau^k onto polynomials of
    degree <= n.  ``tau`` may be an :class:`AffineMap`, a :class:`SquarePlusB`
    or any vectorised callable.
    """
    from .measures import moment, moment_matrix
    from .orthopoly import orthonormal_polys

    M = moment_matrix(model, n).to_array()
    basis = orthonormal_polys(M)
    if basis.rank < n + 1:
        raise RankDeficient(basis.rank)
    exact = M.dtype == object
    if isinstance(tau, AffineMap):
        C = M @ encode_affine(tau, n).A
    elif isinstance(tau, SquarePlusB):
        E = encode_square_plus_b(tau.b, n, rows=2 * n + 1).A
        vals = [moment(model, k) for k in range(3 * n + 1)]
        seq = [v.exact if exact and v.is_rational else v.approx for v in vals]
        C = np.array([[sum(E[l, k] * seq[i + l] for l in range(2 * n + 1)) for k in range(n + 1)]
                      for i in range(n + 1)], dtype=object)
        C = as_matrix(C)
    else:
        C = _tau_power_products(model, tau, n)
    exact = exact and C.dtype == object and matrix_mode(C) == "rational"
    # scaling the rows of R and T by the same factors leaves R^{-1} T alone, so
    # the monic polynomials keep everything rational
    P = basis.monic if exact else np.array(basis.G, dtype=float)
    if not exact:
        M = np.array(M, dtype=float)
        C = np.array(C, dtype=float)
    R = P @ M
    T = P @ C
    At = inverse(R) @ T
    if return_factors:
        return At, R, T
    return At
