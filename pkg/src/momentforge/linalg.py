"""Dense linear algebra on finite truncations of moment matrices.

Matrices are plain numpy arrays.  Exact (rational) matrices use ``dtype=object``
holding :class:`fractions.Fraction` entries; floating matrices are ``float64``
and complex ones ``complex128``.  Arithmetic between two Fractions stays exact,
while any float operand promotes the result to float, which is the numeric
tower Python already gives us.

Indices start at 0, so an order-``n`` truncation is ``(n+1) x (n+1)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from numbers import Integral, Rational

import numba
import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySequence,
    EvenLength,
    NoConvergence,
    NotSymmetric,
    SingularMatrix,
)

__all__ = [
    "HankelMatrix",
    "PSDVerdict",
    "SpectrumReport",
    "as_matrix",
    "conj_transpose",
    "det",
    "hankel_from_sequence",
    "hilbert_matrix",
    "inverse",
    "is_exact",
    "is_hankel",
    "is_upper_triangular",
    "leading_minors",
    "matrix_from_json",
    "matrix_mode",
    "matrix_to_json",
    "numeric_rank",
    "psd_check",
    "rational_sqrt",
    "sym_eig",
    "to_scalar",
    "triple_product",
    "truncate",
]


# ---------------------------------------------------------------- scalars

def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def to_scalar(x):
    """Normalise ``x`` to Fraction, float or complex.

    Strings such as ``"1/3"`` or ``"-2"`` parse to Fraction; strings containing
    a decimal point or exponent parse to float.
    """
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Integral):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return complex(x)
    if isinstance(x, str):
        s = x.strip()
        if any(ch in s for ch in ".eE") and "/" not in s:
            return float(s)
        if "j" in s:
            return complex(s)
        return Fraction(s)
    raise TypeError(f"cannot interpret {x!r} as a scalar")


def rational_sqrt(x):
    """Square root that stays exact when ``x`` is the square of a rational."""
    if is_exact(x):
        x = Fraction(x)
        if x < 0:
            raise ValueError("negative input")
        p, q = x.numerator, x.denominator
        rp, rq = math.isqrt(p), math.isqrt(q)
        if rp * rp == p and rq * rq == q:
            return Fraction(rp, rq)
        # float(x) may overflow for huge rationals; go through the integer roots
        return math.sqrt(p / q) if p < 2**1000 and q < 2**1000 else _big_sqrt(p, q)
    return math.sqrt(x)


def _big_sqrt(p, q):
    shift = max(p.bit_length(), q.bit_length()) - 1000
    shift += shift % 2
    return math.sqrt((p >> shift) / q) * 2.0 ** (shift // 2) if shift > 0 else math.sqrt(p / q)


# ---------------------------------------------------------------- matrices

def as_matrix(obj) -> np.ndarray:
    """Return a 2-D array in one of the three canonical modes."""
    if isinstance(obj, HankelMatrix):
        return obj.to_array()
    arr = np.asarray(obj, dtype=object if not isinstance(obj, np.ndarray) else None)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    if arr.dtype != object:
        if np.iscomplexobj(arr):
            return arr.astype(complex)
        if np.issubdtype(arr.dtype, np.integer) or arr.dtype == bool:
            return _object_array([[Fraction(int(v)) for v in row] for row in arr])
        return arr.astype(float)
    flat = [to_scalar(v) for v in arr.ravel()]
    if all(isinstance(v, Fraction) for v in flat):
        out = np.empty(arr.shape, dtype=object)
        out.ravel()[:] = flat
        return out
    if any(isinstance(v, complex) for v in flat):
        return np.array([complex(v) for v in flat], dtype=complex).reshape(arr.shape)
    return np.array([float(v) for v in flat], dtype=float).reshape(arr.shape)


def _object_array(rows) -> np.ndarray:
    rows = list(rows)
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i, j] = v
    return out


def matrix_mode(A) -> str:
    A = as_matrix(A)
    if A.dtype == object:
        return "rational"
    if np.iscomplexobj(A):
        return "complex"
    return "f64"


def to_float(A) -> np.ndarray:
    A = as_matrix(A)
    if A.dtype == object:
        return A.astype(float)
    return A


def conj_transpose(A) -> np.ndarray:
    A = as_matrix(A)
    if A.dtype == object:
        return A.T.copy()
    return A.conj().T


def truncate(A, n: int) -> np.ndarray:
    """Leading ``(n+1) x (n+1)`` block."""
    return as_matrix(A)[: n + 1, : n + 1].copy()


def is_upper_triangular(A) -> bool:
    A = as_matrix(A)
    return all(A[i, j] == 0 for i in range(A.shape[0]) for j in range(min(i, A.shape[1])))


def is_symmetric(A, tol: float = 0.0) -> bool:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        return False
    if A.dtype == object:
        return bool(np.all(A == A.T))
    H = A.conj().T
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    return bool(np.all(np.abs(A - H) <= tol * scale))


def is_hankel(A, tol: float = 0.0) -> bool:
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        return False
    n = A.shape[0]
    for i in range(n):
        for j in range(n - 1):
            if i + 1 < n:
                d = A[i, j + 1] - A[i + 1, j]
                if (d != 0) if A.dtype == object else abs(d) > tol:
                    return False
    return True


def triple_product(A, M, B) -> np.ndarray:
    """``A^H M B``; exact when all three inputs are rational.

    For upper-triangular ``A`` and ``B`` the leading block of the infinite product
    depends only on the leading blocks of the factors, so this truncated product
    is exact for the truncation.
    """
    A, M, B = as_matrix(A), as_matrix(M), as_matrix(B)
    if A.shape[0] != M.shape[0] or M.shape[1] != B.shape[0]:
        raise DimensionMismatch(
            f"cannot form A^H M B with shapes {A.shape}, {M.shape}, {B.shape}"
        )
    if len({a.dtype == object for a in (A, M, B)}) > 1:
        # mixed exact/float input promotes to float
        A, M, B = (a.astype(float) if a.dtype == object else a for a in (A, M, B))
    return conj_transpose(A).dot(M).dot(B)


def hilbert_matrix(n: int, exact: bool = True) -> np.ndarray:
    return hankel_from_sequence(
        [Fraction(1, k + 1) if exact else 1.0 / (k + 1) for k in range(2 * n + 1)]
    ).to_array()


# ---------------------------------------------------------------- Hankel

@dataclass(frozen=True)
class HankelMatrix:
    """Order-``n`` Hankel truncation stored by its defining sequence m_0..m_2n."""

    seq: tuple

    def __post_init__(self):
        seq = tuple(to_scalar(v) for v in self.seq)
        if not seq:
            raise EmptySequence("Hankel sequence is empty")
        if len(seq) % 2 == 0:
            raise EvenLength(f"Hankel sequence needs odd length 2n+1, got {len(seq)}")
        object.__setattr__(self, "seq", seq)

    @property
    def n(self) -> int:
        return (len(self.seq) - 1) // 2

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def mode(self) -> str:
        if all(isinstance(v, Fraction) for v in self.seq):
            return "rational"
        if any(isinstance(v, complex) for v in self.seq):
            return "complex"
        return "f64"

    def entry(self, i: int, j: int):
        return self.seq[i + j]

    def truncate(self, k: int) -> "HankelMatrix":
        return HankelMatrix(self.seq[: 2 * k + 1])

    def to_array(self) -> np.ndarray:
        n = self.size
        if self.mode == "rational":
            out = np.empty((n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    out[i, j] = self.seq[i + j]
            return out
        s = np.asarray(self.seq, dtype=complex if self.mode == "complex" else float)
        idx = np.add.outer(np.arange(n), np.arange(n))
        return s[idx]

    def __eq__(self, other):
        if isinstance(other, HankelMatrix):
            return self.seq == other.seq
        return NotImplemented

    def __hash__(self):
        return hash(self.seq)


def hankel_from_sequence(seq) -> HankelMatrix:
    return HankelMatrix(tuple(seq))


# ---------------------------------------------------------------- PSD test

@dataclass(frozen=True)
class PSDVerdict:
    is_psd: bool
    witness: int | None = None

    def __bool__(self):
        return self.is_psd

    def __str__(self):
        return "PSD" if self.is_psd else f"Indefinite(witness={self.witness})"


def psd_check(M, tol: float = 1e-12) -> PSDVerdict:
    """Decide positive semidefiniteness by LDL^H elimination with pivot skipping.

    Exact input gets an exact decision.  In float mode a pivot is declared
    nonnegative when it is at least ``-tol * scale`` with ``scale`` the largest
    diagonal magnitude.  The witness is the smallest order ``m`` whose leading
    ``(m+1) x (m+1)`` block fails to be PSD.
    """
    A = as_matrix(M)
    if not is_symmetric(A, tol=1e-12):
        raise NotSymmetric("psd_check needs a symmetric/hermitian matrix")
    n = A.shape[0]
    exact = A.dtype == object
    A = A.copy()
    if exact:
        thr = col_thr = Fraction(0)
    else:
        scale = float(np.max(np.abs(np.diag(A)))) if n else 0.0
        scale = scale or 1.0
        thr = tol * scale
        col_thr = 10.0 * math.sqrt(tol) * scale
    candidate = n
    for k in range(n):
        if k >= candidate:
            break
        d = A[k, k] if exact else A[k, k].real
        if d < -thr:
            return PSDVerdict(False, k)
        col = A[k + 1 :, k]
        if (d == 0) if exact else abs(d) <= thr:
            bad = [j for j, v in enumerate(col, start=k + 1) if abs(v) > col_thr]
            if bad:
                candidate = min(candidate, bad[0])
            continue
        row = A[k, k + 1 :]
        A[k + 1 :, k + 1 :] = A[k + 1 :, k + 1 :] - np.outer(col, row) / d
    if candidate < n:
        return PSDVerdict(False, candidate)
    return PSDVerdict(True, None)


def _ldl_pivots(A) -> list:
    """Pivots of LDL^T with zero pivots (and their zero columns) skipped; exact input."""
    A = as_matrix(A).copy()
    n = A.shape[0]
    piv = []
    for k in range(n):
        d = A[k, k]
        piv.append(d)
        if d == 0:
            continue
        col = A[k + 1 :, k]
        A[k + 1 :, k + 1 :] = A[k + 1 :, k + 1 :] - np.outer(col, A[k, k + 1 :]) / d
    return piv


# ---------------------------------------------------------------- eigen

@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def top(self) -> float:
        return float(self.eigenvalues[0])

    def count_above(self, rel_tol: float) -> int:
        if len(self.eigenvalues) == 0:
            return 0
        lam_max = max(float(self.eigenvalues[0]), 0.0)
        return int(np.sum(self.eigenvalues > rel_tol * lam_max)) if lam_max > 0 else 0

    def to_json(self, **extra) -> str:
        payload = {
            "model": self.meta.get("model"),
            "weights": self.meta.get("weights"),
            "n": self.meta.get("n"),
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "residual": self.meta.get("residual"),
        }
        payload.update(extra)
        return json.dumps(payload)


@numba.njit(cache=True)
def _jacobi_sweep(A, V):
    """One cyclic (row-by-row) sweep of two-sided Jacobi rotations, in place."""
    n = A.shape[0]
    for p in range(n - 1):
        for q in range(p + 1, n):
            apq = A[p, q]
            if apq == 0.0:
                continue
            theta = (A[q, q] - A[p, p]) / (2.0 * apq)
            if abs(theta) > 1e150:
                t = 0.5 / theta
            else:
                sgn = 1.0 if theta >= 0.0 else -1.0
                t = sgn / (abs(theta) + math.sqrt(1.0 + theta * theta))
            c = 1.0 / math.sqrt(1.0 + t * t)
            s = t * c
            app = A[p, p]
            aqq = A[q, q]
            for k in range(n):
                akp = A[p, k]
                akq = A[q, k]
                A[p, k] = c * akp - s * akq
                A[q, k] = s * akp + c * akq
            for k in range(n):
                A[k, p] = A[p, k]
                A[k, q] = A[q, k]
            A[p, p] = app - t * apq
            A[q, q] = aqq + t * apq
            A[p, q] = 0.0
            A[q, p] = 0.0
            for k in range(n):
                vkp = V[k, p]
                vkq = V[k, q]
                V[k, p] = c * vkp - s * vkq
                V[k, q] = s * vkp + c * vkq


def sym_eig(M, tol: float = 1e-12, max_sweeps: int = 60) -> SpectrumReport:
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Iteration stops once the off-diagonal Frobenius mass falls below
    ``tol * ||M||_F``.  Eigenvalues come back in descending order with the
    matching orthonormal eigenvectors as columns.
    """
    M0 = to_float(M)
    if np.iscomplexobj(M0):
        raise NotSymmetric("sym_eig handles real symmetric matrices only")
    scale = max(1.0, float(np.abs(M0).max(initial=0.0)))
    if M0.shape[0] != M0.shape[1] or not np.allclose(M0, M0.T, rtol=0, atol=1e-14 * scale):
        raise NotSymmetric("sym_eig needs a symmetric matrix")
    n = M0.shape[0]
    norm = float(np.linalg.norm(M0))
    A = np.ascontiguousarray(0.5 * (M0 + M0.T))
    V = np.eye(n)
    offmask = ~np.eye(n, dtype=bool)
    sweeps = 0
    while n > 1 and float(np.linalg.norm(A[offmask])) > tol * norm:
        if sweeps >= max_sweeps:
            raise NoConvergence(sweeps)
        _jacobi_sweep(A, V)
        sweeps += 1

    w = np.diag(A).copy()
    srt = np.argsort(-w, kind="stable")
    w, V = w[srt], V[:, srt]
    resid = float(np.max(np.linalg.norm(M0 @ V - V * w, axis=0))) if n else 0.0
    return SpectrumReport(
        eigenvalues=w,
        eigenvectors=V,
        meta={"n": n - 1, "sweeps": sweeps, "residual": resid / norm if norm else resid},
    )


def numeric_rank(M, tol: float = 1e-12) -> int:
    """Rank of a symmetric PSD matrix: exact LDL pivot count or eigenvalue count."""
    A = as_matrix(M)
    if not is_symmetric(A, tol=1e-12):
        raise NotSymmetric("numeric_rank needs a symmetric matrix")
    if A.dtype == object:
        return sum(1 for d in _ldl_pivots(A) if d != 0)
    if not np.any(A):
        return 0
    rep = sym_eig(A)
    return rep.count_above(tol)


# ---------------------------------------------------------------- determinants

def _integer_scaled(A):
    """Scale a rational matrix to an integer one; returns (int rows, common denominator)."""
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in A.ravel()), 1)
    rows = [[int(v * den) for v in row] for row in A]
    return rows, den


def _bareiss_det(rows) -> int:
    a = [r[:] for r in rows]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


def det(A):
    """Determinant; fraction-free integer elimination for rational input."""
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("determinant of a non-square matrix")
    n = A.shape[0]
    if n == 0:
        return Fraction(1) if A.dtype == object else 1.0
    if A.dtype == object:
        rows, den = _integer_scaled(A)
        return Fraction(_bareiss_det(rows), den**n)
    return np.linalg.det(A)


def leading_minors(A) -> list:
    """D_0..D_n, the leading principal minors."""
    A = as_matrix(A)
    n = A.shape[0]
    if A.dtype != object:
        return [np.linalg.det(A[: k + 1, : k + 1]).item() for k in range(n)]
    rows, den = _integer_scaled(A)
    # one no-pivot Bareiss pass yields every leading minor as a pivot
    a = [r[:] for r in rows]
    out, prev = [], 1
    for k in range(n):
        if a[k][k] == 0:
            out.extend(
                Fraction(_bareiss_det([r[: j + 1] for r in rows[: j + 1]]), den ** (j + 1))
                for j in range(k, n)
            )
            return out
        out.append(Fraction(a[k][k], den ** (k + 1)))
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return out


def inverse(A) -> np.ndarray:
    """Exact Gauss-Jordan inverse for rational input, LAPACK otherwise."""
    A = as_matrix(A)
    n = A.shape[0]
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch("inverse of a non-square matrix")
    if A.dtype != object:
        try:
            return np.linalg.inv(A)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(str(exc)) from None
    aug = [list(A[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for k in range(n):
        piv = next((i for i in range(k, n) if aug[i][k] != 0), None)
        if piv is None:
            raise SingularMatrix(f"matrix is singular (column {k})")
        aug[k], aug[piv] = aug[piv], aug[k]
        p = aug[k][k]
        aug[k] = [v / p for v in aug[k]]
        for i in range(n):
            if i != k and aug[i][k] != 0:
                f = aug[i][k]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[k])]
    return _object_array([row[n:] for row in aug])


# ---------------------------------------------------------------- JSON

def _cell_out(v, mode):
    if mode == "rational":
        return f"{v.numerator}/{v.denominator}"
    if mode == "complex":
        return [float(v.real), float(v.imag)]
    return float(v)


def matrix_to_json(A) -> str:
    """``{"n", "mode", "entries"}`` with rationals written as ``"p/q"`` strings."""
    A = as_matrix(A)
    mode = matrix_mode(A)
    payload = {
        "n": A.shape[0] - 1,
        "mode": mode,
        "entries": [[_cell_out(v, mode) for v in row] for row in A],
    }
    if A.shape[0] != A.shape[1]:
        payload["shape"] = list(A.shape)
    return json.dumps(payload)


def matrix_from_json(text) -> np.ndarray:
    payload = json.loads(text) if isinstance(text, str) else text
    mode = payload.get("mode", "f64")
    rows = payload["entries"]
    if mode == "rational":
        return _object_array([[Fraction(v) for v in row] for row in rows])
    if mode == "complex":
        return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    return np.array(rows, dtype=float)
