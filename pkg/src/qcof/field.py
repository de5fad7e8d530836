"""Arithmetic over the prime field Z_p and dense linear algebra on top of it.

Elements are carried as plain integers (or integer numpy arrays) in
``{0, ..., p-1}``; :class:`FieldElement` and :class:`FieldMatrix` are thin
immutable wrappers for call sites that want the modulus attached.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_PRIME = 1 << 16


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class RankDeficientError(ValueError):
    """Raised when a square system over Z_p has rank below its size."""

    def __init__(self, rank: int, size: int):
        super().__init__(f"system matrix has rank {rank} < {size}")
        self.rank = rank
        self.size = size


@lru_cache(maxsize=None)
def _inverse_table(p: int) -> np.ndarray:
    table = np.zeros(p, dtype=np.int64)
    for a in range(1, p):
        table[a] = pow(a, p - 2, p)
    return table


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or not is_prime(int(self.p)):
            raise ValueError(f"p must be a prime, got {self.p!r}")
        if self.p > MAX_PRIME:
            raise ValueError(f"p must not exceed {MAX_PRIME}")
        object.__setattr__(self, "p", int(self.p))

    def __call__(self, value) -> FieldElement:
        return FieldElement(int(value) % self.p, self)

    def reduce(self, x):
        return np.mod(x, self.p)

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return (-a) % self.p

    def mul(self, a, b):
        return (a * b) % self.p

    def inv(self, a):
        """Multiplicative inverse; works elementwise on arrays."""
        arr = np.asarray(a) % self.p
        if np.any(arr == 0):
            raise ZeroDivisionError("0 has no inverse in Z_p")
        out = _inverse_table(self.p)[arr]
        return int(out) if np.ndim(a) == 0 else out

    def inverse_table(self) -> np.ndarray:
        return _inverse_table(self.p).copy()

    def elements(self) -> range:
        return range(self.p)


@dataclass(frozen=True)
class FieldElement:
    value: int
    field: PrimeField

    def __post_init__(self):
        if not 0 <= self.value < self.field.p:
            raise ValueError(f"{self.value} is not a canonical element of Z_{self.field.p}")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field != self.field:
                raise ValueError("operands live in different fields")
            return other.value
        return int(other)

    def __add__(self, other):
        return self.field(self.value + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.field(self.value - self._coerce(other))

    def __rsub__(self, other):
        return self.field(self._coerce(other) - self.value)

    def __mul__(self, other):
        return self.field(self.value * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.field(-self.value)

    def inverse(self) -> FieldElement:
        return self.field(self.field.inv(self.value))

    def __truediv__(self, other):
        return self * self.field(self._coerce(other)).inverse()

    def __int__(self):
        return self.value

    def __index__(self):
        return self.value


def g_map(u) -> int:
    """Integer label of a field element: its least nonnegative representative."""
    if isinstance(u, FieldElement):
        return u.value
    return int(u)


def g_inverse(n, p: int):
    """Field element labelled by the integer ``n`` (reduced mod p first).

    Accepts scalars or integer arrays; arrays come back as int arrays.
    """
    if np.ndim(n) == 0:
        return PrimeField(p)(int(n))
    return np.mod(np.asarray(n, dtype=np.int64), p)


@dataclass(frozen=True, eq=False)
class FieldMatrix:
    """Dense matrix over Z_p (entries canonical, read-only)."""

    entries: np.ndarray
    field: PrimeField

    def __post_init__(self):
        arr = np.mod(np.asarray(self.entries, dtype=np.int64), self.field.p)
        if arr.ndim != 2:
            raise ValueError("FieldMatrix needs a 2-D array")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def from_rows(cls, rows, p: int) -> FieldMatrix:
        return cls(np.array(rows, dtype=np.int64), PrimeField(p))

    @property
    def shape(self):
        return self.entries.shape

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def __matmul__(self, other: FieldMatrix) -> FieldMatrix:
        if other.field != self.field:
            raise ValueError("operands live in different fields")
        return FieldMatrix(matmul(self.entries, other.entries, self.field.p), self.field)

    def __eq__(self, other):
        return (
            isinstance(other, FieldMatrix)
            and other.field == self.field
            and np.array_equal(self.entries, other.entries)
        )

    def rank(self) -> int:
        return rank(self.entries, self.field.p)

    def __array__(self, dtype=None, copy=None):
        return self.entries.astype(dtype) if dtype is not None else self.entries.copy()


def matmul(A, B, p: int) -> np.ndarray:
    """Matrix product mod p without int64 overflow for p <= 2**16."""
    A = np.asarray(A, dtype=np.int64) % p
    B = np.asarray(B, dtype=np.int64) % p
    # each partial product < 2**32, so chunk the inner dimension to stay < 2**63
    step = max(1, (1 << 62) // (p * p))
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    for s in range(0, A.shape[1], step):
        out = (out + A[:, s:s + step] @ B[s:s + step]) % p
    return out


def row_reduce(M, p: int):
    """Reduced row echelon form of ``M`` over Z_p.

    Returns ``(R, pivots)``. Pivot search takes the first row (lowest index)
    with a nonzero entry in the current column.
    """
    R = np.array(M, dtype=np.int64) % p
    inv = _inverse_table(p)
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(R[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            R[[r, piv]] = R[[piv, r]]
        R[r] = (R[r] * inv[R[r, c]]) % p
        others = np.flatnonzero(R[:, c])
        others = others[others != r]
        if others.size:
            R[others] = (R[others] - np.outer(R[others, c], R[r])) % p
        pivots.append(c)
        r += 1
    return R, pivots


def rank(M, p: int) -> int:
    return len(row_reduce(M, p)[1])


def gaussian_eliminate(A, B, p: int | None = None) -> np.ndarray:
    """Solve ``A X = B`` over Z_p for square ``A``.

    ``A``/``B`` may be :class:`FieldMatrix` objects (then ``p`` is implied) or
    integer arrays with ``p`` given. Raises :class:`RankDeficientError`
    carrying the rank of ``A`` when it is singular.
    """
    if isinstance(A, FieldMatrix):
        p = A.field.p
        A = A.entries
    if isinstance(B, FieldMatrix):
        if p is not None and B.field.p != p:
            raise ValueError("operands live in different fields")
        p = B.field.p
        B = B.entries
    if p is None:
        raise TypeError("p is required for plain arrays")
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    vector_rhs = B.ndim == 1
    if vector_rhs:
        B = B[:, None]
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n:
        raise ValueError(f"shape mismatch: A {A.shape}, B {B.shape}")
    R, pivots = row_reduce(np.hstack([A, B]), p)
    a_rank = sum(1 for c in pivots if c < n)
    if a_rank < n:
        raise RankDeficientError(a_rank, n)
    X = R[:n, n:]
    return X[:, 0] if vector_rhs else X


def null_space(H, p: int) -> tuple[np.ndarray, list[int], list[int]]:
    """Generator for the right null space of ``H`` over Z_p.

    Returns ``(G, free, pivots)`` with ``H @ G = 0`` and ``G`` of shape
    ``(n, len(free))`` whose rows at ``free`` form an identity block.
    """
    R, pivots = row_reduce(H, p)
    n = R.shape[1]
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    G = np.zeros((n, len(free)), dtype=np.int64)
    for t, f in enumerate(free):
        G[f, t] = 1
    for r, c in enumerate(pivots):
        G[c, :] = (-R[r, free]) % p
    return G, free, pivots
