"""Quaternion scalars, quaternion matrices, and the SVD over the quaternions.

A quaternion q = w + x i + y j + z k multiplies by the Hamilton rules
i^2 = j^2 = k^2 = -1, ij = -ji = k, jk = -kj = i, ki = -ik = j. The product
is associative but not commutative, so "divide" always means multiplication
by an explicit inverse on a stated side.

Matrices are stored in Cayley-Dickson form: a pair of complex arrays (A, B)
with entry q = A + B j, where A = w + x i and B = y + z i. With j on the
right of B, entrywise products obey

    (A1 + B1 j)(A2 + B2 j) = (A1 A2 - B1 conj(B2)) + (A1 B2 + B1 conj(A2)) j,

so a quaternion matrix product costs a handful of complex BLAS products. The
complex adjoint of an M x N quaternion matrix is the 2M x 2N complex matrix

    [[ A,        B      ],
     [-conj(B),  conj(A)]],

an algebra homomorphism (products and conjugate transposes map through it).
Every singular value of the adjoint appears exactly twice, and the SVD of a
quaternion matrix is read off the adjoint's SVD by keeping the odd-indexed
(1-based) singular values and columns; `qsvd` implements that extraction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    HermitianDefectWarning,
    ShapeMismatch,
    ZeroQuaternion,
)

__all__ = [
    "Quaternion",
    "QuaternionMatrix",
    "QsvdResult",
    "cayley_dickson_split",
    "cayley_dickson_merge",
    "complex_adjoint",
    "qsvd",
    "dominant_eigpair",
    "vdot",
    "embed_r3",
    "r3_components",
]


@dataclass(frozen=True)
class Quaternion:
    """A single quaternion w + x i + y j + z k with float components."""

    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion | float | int") -> "Quaternion":
        """Hamilton product, or scaling when `other` is a real number."""
        if isinstance(other, (int, float)):
            return Quaternion(self.w * other, self.x * other,
                              self.y * other, self.z * other)
        a, b, c, d = self.w, self.x, self.y, self.z
        e, f, g, h = other.w, other.x, other.y, other.z
        return Quaternion(
            a * e - b * f - c * g - d * h,
            a * f + b * e + c * h - d * g,
            a * g - b * h + c * e + d * f,
            a * h + b * g - c * f + d * e,
        )

    def __rmul__(self, other: "float | int") -> "Quaternion":
        if isinstance(other, (int, float)):
            return self * other
        return NotImplemented

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self) -> float:
        return math.sqrt(self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2)

    __abs__ = norm

    def inverse(self) -> "Quaternion":
        n2 = self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2
        if n2 == 0.0:
            raise ZeroQuaternion("zero quaternion has no inverse")
        return Quaternion(self.w / n2, -self.x / n2, -self.y / n2, -self.z / n2)

    def normalized(self) -> "Quaternion":
        n = self.norm()
        if n == 0.0:
            raise ZeroQuaternion("cannot normalize the zero quaternion")
        return Quaternion(self.w / n, self.x / n, self.y / n, self.z / n)

    def to_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def isclose(self, other: "Quaternion", atol: float = 1e-12) -> bool:
        return (self - other).norm() <= atol

    # Cayley-Dickson pair of this scalar, used when scaling matrices.
    @property
    def _pair(self) -> tuple[complex, complex]:
        return complex(self.w, self.x), complex(self.y, self.z)


def _as_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise ShapeMismatch(f"pair shapes differ: {a.shape} vs {b.shape}")
    if a.ndim not in (1, 2):
        raise ShapeMismatch("quaternion arrays must be 1-D or 2-D")
    return a, b


class QuaternionMatrix:
    """Dense quaternion matrix (or vector) in Cayley-Dickson form.

    Instances are immutable: the backing arrays are frozen at construction,
    and every operation returns a new object. `@` is the quaternion matrix
    product; the left or right operand may instead be a real ndarray, which
    acts componentwise on the pair. Entry products by a scalar quaternion are
    side-explicit (`left_mul` / `right_mul`) because they differ.
    """

    __slots__ = ("_a", "_b")

    # Defer mixed ndarray expressions to this class's reflected operators.
    __array_ufunc__ = None

    def __init__(self, a: np.ndarray, b: np.ndarray):
        a, b = _as_pair(a, b)
        self._a = a.copy()
        self._b = b.copy()
        self._a.setflags(write=False)
        self._b.setflags(write=False)

    # ---- constructors ----

    @classmethod
    def from_components(cls, w, x, y, z) -> "QuaternionMatrix":
        w, x, y, z = (np.asarray(t, dtype=float) for t in (w, x, y, z))
        return cls(w + 1j * x, y + 1j * z)

    @classmethod
    def from_real(cls, arr) -> "QuaternionMatrix":
        arr = np.asarray(arr, dtype=float)
        return cls(arr.astype(complex), np.zeros_like(arr, dtype=complex))

    @classmethod
    def zeros(cls, shape) -> "QuaternionMatrix":
        z = np.zeros(shape, dtype=complex)
        return cls(z, z.copy())

    @classmethod
    def eye(cls, n: int) -> "QuaternionMatrix":
        return cls(np.eye(n, dtype=complex), np.zeros((n, n), dtype=complex))

    # ---- views ----

    @property
    def a(self) -> np.ndarray:
        return self._a

    @property
    def b(self) -> np.ndarray:
        return self._b

    @property
    def w(self) -> np.ndarray:
        return self._a.real

    @property
    def x(self) -> np.ndarray:
        return self._a.imag

    @property
    def y(self) -> np.ndarray:
        return self._b.real

    @property
    def z(self) -> np.ndarray:
        return self._b.imag

    @property
    def shape(self) -> tuple[int, ...]:
        return self._a.shape

    @property
    def ndim(self) -> int:
        return self._a.ndim

    def __len__(self) -> int:
        return self._a.shape[0]

    def __getitem__(self, key) -> "Quaternion | QuaternionMatrix":
        a, b = self._a[key], self._b[key]
        if np.ndim(a) == 0:
            return Quaternion(float(a.real), float(a.imag),
                              float(b.real), float(b.imag))
        return QuaternionMatrix(a, b)

    # ---- algebra ----

    def conj(self) -> "QuaternionMatrix":
        return QuaternionMatrix(np.conj(self._a), -self._b)

    @property
    def T(self) -> "QuaternionMatrix":
        return QuaternionMatrix(self._a.T, self._b.T)

    @property
    def H(self) -> "QuaternionMatrix":
        """Conjugate transpose."""
        return QuaternionMatrix(np.conj(self._a).T, -self._b.T)

    def __add__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        return QuaternionMatrix(self._a + other._a, self._b + other._b)

    def __sub__(self, other: "QuaternionMatrix") -> "QuaternionMatrix":
        return QuaternionMatrix(self._a - other._a, self._b - other._b)

    def __neg__(self) -> "QuaternionMatrix":
        return QuaternionMatrix(-self._a, -self._b)

    def __mul__(self, s: "float | int") -> "QuaternionMatrix":
        if not isinstance(s, (int, float)):
            return NotImplemented
        return QuaternionMatrix(self._a * s, self._b * s)

    __rmul__ = __mul__

    def __truediv__(self, s: "float | int") -> "QuaternionMatrix":
        return QuaternionMatrix(self._a / s, self._b / s)

    def left_mul(self, q: Quaternion) -> "QuaternionMatrix":
        """Entrywise product q * self."""
        qa, qb = q._pair
        return QuaternionMatrix(qa * self._a - qb * np.conj(self._b),
                                qa * self._b + qb * np.conj(self._a))

    def right_mul(self, q: Quaternion) -> "QuaternionMatrix":
        """Entrywise product self * q."""
        qa, qb = q._pair
        return QuaternionMatrix(self._a * qa - self._b * np.conj(qb),
                                self._a * qb + self._b * np.conj(qa))

    def __matmul__(self, other) -> "QuaternionMatrix":
        if isinstance(other, QuaternionMatrix):
            oa, ob = other._a, other._b
        elif isinstance(other, np.ndarray):
            oa = np.asarray(other, dtype=complex)
            ob = np.zeros_like(oa)
        else:
            return NotImplemented
        try:
            a = self._a @ oa - self._b @ np.conj(ob)
            b = self._a @ ob + self._b @ np.conj(oa)
        except ValueError as exc:
            raise DimensionMismatch(str(exc)) from None
        return QuaternionMatrix(a, b)

    def __rmatmul__(self, other) -> "QuaternionMatrix":
        if not isinstance(other, np.ndarray):
            return NotImplemented
        r = np.asarray(other, dtype=float)
        try:
            return QuaternionMatrix(r @ self._a, r @ self._b)
        except ValueError as exc:
            raise DimensionMismatch(str(exc)) from None

    # ---- measures ----

    def norm(self) -> float:
        """Frobenius norm, the root of the summed squared entry norms."""
        return math.sqrt(float(np.sum(np.abs(self._a) ** 2)
                               + np.sum(np.abs(self._b) ** 2)))

    def entry_norms(self) -> np.ndarray:
        return np.sqrt(np.abs(self._a) ** 2 + np.abs(self._b) ** 2)

    def hermitian_defect(self) -> float:
        """Relative Frobenius distance to the conjugate transpose."""
        if self.ndim != 2 or self.shape[0] != self.shape[1]:
            raise ShapeMismatch("hermitian_defect needs a square matrix")
        num = (self - self.H).norm()
        den = max(self.norm(), np.finfo(float).tiny)
        return num / den

    def allclose(self, other: "QuaternionMatrix", atol: float = 1e-12) -> bool:
        return (np.allclose(self._a, other._a, atol=atol)
                and np.allclose(self._b, other._b, atol=atol))

    def __repr__(self) -> str:
        return f"QuaternionMatrix(shape={self.shape})"


def cayley_dickson_split(q: QuaternionMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Return the complex pair (A, B) with entries q = A + B j.

    A carries the real and i components, B the j and k components. The split
    is an isomorphism of additive groups; `cayley_dickson_merge` inverts it.
    """
    return q.a.copy(), q.b.copy()


def cayley_dickson_merge(a: np.ndarray, b: np.ndarray) -> QuaternionMatrix:
    """Rebuild a quaternion matrix from its complex pair."""
    return QuaternionMatrix(a, b)


def complex_adjoint(q: QuaternionMatrix) -> np.ndarray:
    """Complex 2M x 2N adjoint [[A, B], [-conj(B), conj(A)]].

    The map respects products, conjugate transposes, and Frobenius norms up
    to the doubling factor sqrt(2); each singular value of q shows up twice.
    """
    a, b = q.a, q.b
    if q.ndim == 1:
        a = a[:, None]
        b = b[:, None]
    return np.block([[a, b], [-np.conj(b), np.conj(a)]])


@dataclass(frozen=True)
class QsvdResult:
    """Quaternion SVD factors: `u` (M x M), `singular_values`, `v` (N x N).

    Singular values are real, nonnegative, nonincreasing, of length
    min(M, N). `reconstruct` multiplies the truncated factors back together.
    """

    u: QuaternionMatrix
    singular_values: np.ndarray
    v: QuaternionMatrix

    @property
    def rectangular_diag(self) -> np.ndarray:
        m = self.u.shape[0]
        n = self.v.shape[0]
        d = np.zeros((m, n))
        k = len(self.singular_values)
        d[:k, :k] = np.diag(self.singular_values)
        return d

    def reconstruct(self, rank: int | None = None) -> QuaternionMatrix:
        k = len(self.singular_values) if rank is None else rank
        uk = QuaternionMatrix(self.u.a[:, :k] * self.singular_values[:k],
                              self.u.b[:, :k] * self.singular_values[:k])
        vk = QuaternionMatrix(self.v.a[:, :k], self.v.b[:, :k])
        return uk @ vk.H


def qsvd(q: QuaternionMatrix) -> QsvdResult:
    """Singular value decomposition of a quaternion matrix.

    Computed through the complex adjoint: its 2 min(M, N) singular values
    come in equal pairs, and one column of each pair maps back to a
    quaternion singular vector. The backend returns values nonincreasing; a
    stable re-sort is applied anyway so that equal pairs stay adjacent before
    the odd-index extraction. A complex column u = [u1; u2] pulls back to the
    quaternion column u1 - conj(u2) j.
    """
    if q.ndim != 2:
        raise ShapeMismatch("qsvd needs a 2-D quaternion matrix")
    m, n = q.shape
    qc = complex_adjoint(q)
    uc, s, vh = np.linalg.svd(qc, full_matrices=True)
    vc = np.conj(vh).T
    order = np.argsort(-s, kind="stable")
    s = s[order]
    # Only the leading 2*min(m,n) columns carry singular values; columns past
    # them span null spaces and stay where the backend put them.
    uc[:, : len(order)] = uc[:, order]
    vc[:, : len(order)] = vc[:, order]

    u1, u2 = uc[:m], uc[m:]
    v1, v2 = vc[:n], vc[n:]
    uq = QuaternionMatrix(u1[:, ::2], -np.conj(u2)[:, ::2])
    vq = QuaternionMatrix(v1[:, ::2], -np.conj(v2)[:, ::2])
    return QsvdResult(uq, s[::2].copy(), vq)


def dominant_eigpair(
    k: QuaternionMatrix, hermitian_tol: float = 1e-12
) -> tuple[float, QuaternionMatrix]:
    """Largest singular pair (lambda, u) of a Hermitian quaternion matrix.

    The input is symmetrized to (K + K^H)/2 first; a defect beyond
    `hermitian_tol` (relative Frobenius) is reported with a warning rather
    than an error, since measurement noise routinely lands just outside
    exact symmetry. For matrices whose dominant eigenvalue is nonnegative,
    which holds for every kernel built in this package, the returned pair is
    also the dominant right eigenpair: K u = u lambda.
    """
    if k.ndim != 2 or k.shape[0] != k.shape[1]:
        raise ShapeMismatch("dominant_eigpair needs a square matrix")
    defect = k.hermitian_defect()
    if defect > hermitian_tol:
        warnings.warn(
            f"hermitian defect {defect:.3e} exceeds {hermitian_tol:.1e}; "
            "input symmetrized",
            HermitianDefectWarning,
            stacklevel=2,
        )
    ks = (k + k.H) / 2
    res = qsvd(ks)
    lam = float(res.singular_values[0])
    u = QuaternionMatrix(res.u.a[:, 0], res.u.b[:, 0])
    return lam, u


def vdot(u: QuaternionMatrix, v: QuaternionMatrix) -> Quaternion:
    """Inner product sum_m conj(u_m) v_m of two quaternion vectors."""
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ShapeMismatch("vdot needs two equal-length quaternion vectors")
    a = np.sum(np.conj(u.a) * v.a + u.b * np.conj(v.b))
    b = np.sum(np.conj(u.a) * v.b - u.b * np.conj(v.a))
    return Quaternion(float(a.real), float(a.imag), float(b.real), float(b.imag))


def embed_r3(rows: np.ndarray) -> QuaternionMatrix:
    """Map (n, 3) real rows (a, b, c) to the quaternion vector a + b i + c j.

    The k component is fixed at zero; this is the coordinate embedding every
    kernel and solver in this package shares.
    """
    v = np.asarray(rows, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise ShapeMismatch("rows must form an (n, 3) array")
    return QuaternionMatrix(v[:, 0] + 1j * v[:, 1], v[:, 2].astype(complex))


def r3_components(q: QuaternionMatrix) -> np.ndarray:
    """Inverse of `embed_r3`: the real, i, and j components as (n, 3) rows.

    Any k component is dropped; callers decide whether its size matters.
    """
    if q.ndim != 1:
        raise ShapeMismatch("expected a quaternion vector")
    return np.column_stack([q.w, q.x, q.y])
