"""Orthogonal polynomials, Hankel minors and Jacobi matrices.

Polynomials are coefficient vectors in the monomial basis, lowest degree first.
The inner product of two such vectors u, v under a Hankel matrix M is u^T M v.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    NotPSD,
    NotSymmetric,
    RankDeficient,
    TruncationTooSmall,
)
from .linalg import (
    HankelMatrix,
    as_matrix,
    det,
    is_exact,
    leading_minors,
    numeric_rank,
    psd_check,
    rational_sqrt,
    to_scalar,
)

__all__ = [
    "JacobiMatrix",
    "OrthoBasis",
    "bordered_polynomial",
    "hankel_from_banded",
    "hankel_minors",
    "jacobi_from_moments",
    "measure_rank",
    "orthonormal_polys",
]

FLOAT_RANK_TOL = 1e-10


def _as_hankel(M) -> HankelMatrix:
    if isinstance(M, HankelMatrix):
        return M
    A = as_matrix(M)
    n = A.shape[0]
    seq = [A[0, k] for k in range(n)] + [A[k, n - 1] for k in range(1, n)]
    return HankelMatrix(tuple(seq))


def hankel_minors(M) -> list:
    """Leading principal minors D_0..D_n."""
    return leading_minors(_as_hankel(M).to_array())


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal polynomials p_0..p_{rank-1} for a Hankel matrix of order n.

    ``monic`` and ``norms`` carry the monic orthogonal polynomials and their
    squared norms h_k exactly; ``G`` holds p_k = monic_k / sqrt(h_k) and is exact
    only when every h_k is the square of a rational.
    """

    n: int
    G: np.ndarray
    rank: int
    monic: np.ndarray
    norms: tuple

    @property
    def exact(self) -> bool:
        return self.G.dtype == object

    def polynomial(self, k: int) -> np.ndarray:
        return self.G[k]


def _inner(u, v, A):
    return u @ A @ v


def _gram_schmidt(A, exact: bool, method: str):
    n1 = A.shape[0]
    zero = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    monic, norms = [], []
    for k in range(n1):
        v = np.array([zero] * n1, dtype=object if exact else float)
        v[k] = one
        if method == "classical":
            coeffs = [_inner(v, s, A) / h for s, h in zip(monic, norms)]
            for c, s in zip(coeffs, monic):
                v = v - c * s
        elif method == "modified":
            for s, h in zip(monic, norms):
                v = v - (_inner(v, s, A) / h) * s
        else:
            raise ValueError(f"unknown Gram-Schmidt variant {method!r}")
        h = _inner(v, v, A)
        if exact:
            if h == 0:
                break
        elif h <= FLOAT_RANK_TOL * max(abs(A[k, k]), np.finfo(float).tiny):
            break
        monic.append(v)
        norms.append(h)
    return monic, norms


def orthonormal_polys(M, method: str = "classical") -> OrthoBasis:
    """Gram-Schmidt on 1, x, x^2, ... under M, stopping at the first null direction."""
    H = _as_hankel(M)
    A = H.to_array()
    if A.dtype == complex:
        A = A.real.astype(float)
    verdict = psd_check(A)
    if not verdict:
        raise NotPSD(f"moment matrix is not positive semidefinite: {verdict}")
    exact = A.dtype == object
    monic, norms = _gram_schmidt(A, exact, method)
    rank = len(norms)
    n1 = A.shape[0]
    roots = [rational_sqrt(h) if exact else np.sqrt(h) for h in norms]
    g_exact = exact and all(is_exact(r) for r in roots)
    S = np.array(monic, dtype=object if exact else float).reshape(rank, n1)
    if g_exact:
        G = np.array([s / r for s, r in zip(monic, roots)], dtype=object).reshape(rank, n1)
    else:
        G = np.array(
            [np.array([float(c) for c in s]) / float(r) for s, r in zip(monic, roots)],
            dtype=float,
        ).reshape(rank, n1)
    return OrthoBasis(n=H.n, G=G, rank=rank, monic=S, norms=tuple(norms))


def measure_rank(M) -> int:
    """Smallest k with D_k = 0, or n+1 when every leading minor is nonzero."""
    H = _as_hankel(M)
    A = H.to_array()
    verdict = psd_check(A)
    if not verdict:
        raise NotPSD(f"moment matrix is not positive semidefinite: {verdict}")
    if A.dtype == object:
        for k, d in enumerate(leading_minors(A)):
            if d == 0:
                return k
        return A.shape[0]
    return numeric_rank(A)


def bordered_polynomial(M, k: int) -> np.ndarray:
    """Coefficients of D_k(x), the Hankel determinant whose last row is 1, x, ..., x^k."""
    A = _as_hankel(M).to_array()
    top = A[:k, : k + 1]
    coeffs = []
    for i in range(k + 1):
        minor = np.delete(top, i, axis=1)
        d = det(minor) if k else (Fraction(1) if A.dtype == object else 1.0)
        coeffs.append(d if (k + i) % 2 == 0 else -d)
    return np.array(coeffs, dtype=object if A.dtype == object else float)


# ---------------------------------------------------------------- Jacobi

@dataclass(frozen=True)
class JacobiMatrix:
    """Symmetric tridiagonal matrix with diagonal a_j and off-diagonal b_j.

    ``beta`` holds b_j^2, exact whenever the moments were.  A ``complete``
    matrix is the whole operator of a finitely supported measure.  Otherwise
    it comes from moments m_0..m_2n, which fix a_0..a_{n-1} and b_1..b_n but
    not a_n.
    """

    diag: tuple
    offdiag: tuple
    beta: tuple
    complete: bool = False

    @property
    def size(self) -> int:
        return len(self.offdiag) + 1

    @property
    def mode(self) -> str:
        vals = self.diag + self.offdiag
        return "rational" if all(isinstance(v, Fraction) for v in vals) else "f64"

    def to_array(self) -> np.ndarray:
        """Dense symmetric form; an undetermined last diagonal entry is set to 0."""
        n = self.size
        exact = self.mode == "rational"
        zero = Fraction(0) if exact else 0.0
        out = np.array([[zero] * n for _ in range(n)], dtype=object if exact else float)
        for j, a in enumerate(self.diag):
            out[j, j] = a if exact else float(a)
        for j, b in enumerate(self.offdiag):
            out[j, j + 1] = out[j + 1, j] = b if exact else float(b)
        return out

    def to_json(self) -> str:
        mode = self.mode

        def cell(v):
            return f"{v.numerator}/{v.denominator}" if mode == "rational" else float(v)

        return json.dumps({
            "diag": [cell(v) for v in self.diag],
            "offdiag": [cell(v) for v in self.offdiag],
            "mode": mode,
        })

    @classmethod
    def from_json(cls, text) -> "JacobiMatrix":
        payload = json.loads(text) if isinstance(text, str) else text
        diag = tuple(to_scalar(v) for v in payload["diag"])
        off = tuple(to_scalar(v) for v in payload["offdiag"])
        return cls(diag, off, tuple(b * b for b in off), complete=len(diag) == len(off) + 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "a_k", "b_k"])
        for k in range(self.size):
            a = self.diag[k] if k < len(self.diag) else ""
            b = self.offdiag[k - 1] if 1 <= k <= len(self.offdiag) else ""
            w.writerow([k, a, b])
        return buf.getvalue()


def jacobi_from_moments(M, method: str = "classical", allow_finite_rank: bool = False) -> JacobiMatrix:
    """Three-term recursion coefficients x p_j = b_j p_{j-1} + a_j p_j + b_{j+1} p_{j+1}.

    Uses a_j = <x P_j, P_j> / h_j and b_j^2 = h_j / h_{j-1} for the monic
    orthogonal P_j, so the output depends only on the moment sequence.
    """
    H = _as_hankel(M)
    basis = orthonormal_polys(H, method=method)
    r, n = basis.rank, H.n
    if r < n + 1 and not allow_finite_rank:
        raise RankDeficient(r, f"leading minor D_{r} vanishes; measure has rank {r}")
    seq = H.seq
    exact = H.mode == "rational"
    n_a = r if r < n + 1 else n
    shifted = np.empty((n + 1, n + 1), dtype=object if exact else float)
    for i in range(n + 1):
        for j in range(n + 1):
            shifted[i, j] = seq[i + j + 1] if i + j + 1 < len(seq) else (Fraction(0) if exact else 0.0)
    diag = tuple(
        _inner(basis.monic[j], basis.monic[j], shifted) / basis.norms[j] for j in range(n_a)
    )
    n_b = r - 1 if r < n + 1 else n
    beta = tuple(basis.norms[j] / basis.norms[j - 1] for j in range(1, n_b + 1))
    offdiag = tuple(rational_sqrt(b) if exact else float(np.sqrt(b)) for b in beta)
    if not exact:
        diag = tuple(float(a) for a in diag)
        beta = tuple(float(b) for b in beta)
    return JacobiMatrix(diag, offdiag, beta, complete=r < n + 1)


def _bandwidth(A) -> int:
    n = A.shape[0]
    w = 0
    for i in range(n):
        for j in range(n):
            if A[i, j] != 0:
                w = max(w, abs(i - j))
    return w


def hankel_from_banded(T, N: int, finite: bool | None = None) -> HankelMatrix:
    """Hankel matrix of order N with entries <e_0 | T^(j+k) e_0>.

    A :class:`JacobiMatrix` is evaluated exactly through the similar matrix with
    ones above the diagonal and b_j^2 below it.  A dense array is treated as a
    truncation of a larger banded operator unless ``finite`` is true, and must
    then have dimension at least bandwidth*N + 1 (a closed walk of length 2N
    from index 0 never goes further out).
    """
    if isinstance(T, JacobiMatrix):
        if not T.complete and N > T.size - 1:
            raise TruncationTooSmall(
                f"this Jacobi matrix determines moments up to order {2 * (T.size - 1)}, "
                f"{2 * N} requested"
            )
        n = T.size
        exact = all(is_exact(v) for v in T.diag + T.beta)
        zero = Fraction(0) if exact else 0.0
        diag = list(T.diag) + [zero] * (n - len(T.diag))
        if not exact:
            diag = [float(a) for a in diag]
        beta = [b if exact else float(b) for b in T.beta]
        v = [zero] * n
        v[0] = Fraction(1) if exact else 1.0
        seq = []
        for _ in range(2 * N + 1):
            seq.append(v[0])
            # row vector times the similar matrix: w_j = v_j a_j + v_{j-1} * 1 + v_{j+1} * beta_{j+1}
            w = []
            for j in range(n):
                s = v[j] * diag[j]
                if j > 0:
                    s += v[j - 1]
                if j + 1 < n:
                    s += v[j + 1] * beta[j]
                w.append(s)
            v = w
        return HankelMatrix(tuple(seq))

    A = as_matrix(T)
    if A.shape[0] != A.shape[1]:
        raise NotSymmetric("banded operator must be square")
    if A.dtype == object:
        sym = all(A[i, j] == A[j, i] for i in range(A.shape[0]) for j in range(i))
    else:
        sym = np.allclose(A, A.conj().T, rtol=0, atol=1e-14 * max(1.0, np.abs(A).max(initial=0)))
    if not sym:
        raise NotSymmetric("banded operator must be symmetric")
    dim = A.shape[0]
    w = _bandwidth(A)
    if not finite and dim < w * N + 1:
        raise TruncationTooSmall(
            f"bandwidth {w} needs dimension >= {w * N + 1} for order {N}, got {dim}"
        )
    exact = A.dtype == object
    v = np.zeros(dim, dtype=object if exact else A.dtype)
    if exact:
        v[:] = Fraction(0)
    v[0] = Fraction(1) if exact else 1.0
    seq = []
    for _ in range(2 * N + 1):
        seq.append(v[0])
        v = A @ v
    if not exact:
        seq = [float(np.real(s)) if np.iscomplexobj(A) else float(s) for s in seq]
    return HankelMatrix(tuple(seq))
