"""Protograph base matrices over Z_p: RA/IRA families and check-node merging.

Repeat-accumulate style protographs carry their accumulator explicitly as a
*ring*: check rows ``ring_rows[0..m-1]`` and degree-2 parity columns
``ring_cols[0..m-1]`` where ``ring_cols[t]`` joins ``ring_rows[t]`` and
``ring_rows[t+1]``; the last column closes the ring and is lifted with a
one-step, non-circular shift so the lifted parity part is a single
accumulator chain.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

RA_RATES = (Fraction(1, 2), Fraction(2, 3), Fraction(4, 5))

IRA_Z7_RATE_HALF = (
    (1, 0, 1, 1, 1, 1, 0, 0),
    (0, 1, 1, 1, 0, 1, 1, 0),
    (1, 1, 0, 1, 0, 0, 1, 1),
    (0, 0, 1, 2, 1, 0, 0, 1),
)


@dataclass(frozen=True, eq=False)
class BaseMatrix:
    entries: np.ndarray
    ring_rows: tuple[int, ...] | None = None
    ring_cols: tuple[int, ...] | None = None

    def __post_init__(self):
        B = np.array(self.entries, dtype=np.int64)
        if B.ndim != 2 or B.size == 0:
            raise ValueError("base matrix must be a nonempty 2-D array")
        if np.any(B < 0):
            raise ValueError("edge multiplicities must be nonnegative")
        if np.any(B.sum(axis=1) == 0) or np.any(B.sum(axis=0) == 0):
            raise ValueError("base matrix has an all-zero row or column")
        B.setflags(write=False)
        object.__setattr__(self, "entries", B)
        if (self.ring_rows is None) != (self.ring_cols is None):
            raise ValueError("ring_rows and ring_cols go together")
        if self.ring_rows is not None:
            object.__setattr__(self, "ring_rows", tuple(int(r) for r in self.ring_rows))
            object.__setattr__(self, "ring_cols", tuple(int(c) for c in self.ring_cols))
            self._check_ring()

    def _check_ring(self):
        B = self.entries
        rows, cols = self.ring_rows, self.ring_cols
        m = len(rows)
        if len(cols) != m or sorted(rows) != list(range(B.shape[0])):
            raise ValueError("the accumulator ring must visit every check row once")
        for t, c in enumerate(cols):
            expect = np.zeros(B.shape[0], dtype=np.int64)
            expect[rows[t]] += 1
            expect[rows[(t + 1) % m]] += 1
            if not np.array_equal(B[:, c], expect):
                raise ValueError(f"column {c} is not an accumulator column of the ring")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def n_checks(self) -> int:
        return self.entries.shape[0]

    @property
    def n_vars(self) -> int:
        return self.entries.shape[1]

    @property
    def design_rate(self) -> Fraction:
        return 1 - Fraction(self.n_checks, self.n_vars)

    @property
    def has_accumulator(self) -> bool:
        return self.ring_rows is not None

    @property
    def info_cols(self) -> tuple[int, ...]:
        ring = set(self.ring_cols or ())
        return tuple(j for j in range(self.n_vars) if j not in ring)

    def row_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def col_degrees(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    @property
    def n_edges(self) -> int:
        return int(self.entries.sum())

    def __eq__(self, other):
        return (
            isinstance(other, BaseMatrix)
            and np.array_equal(self.entries, other.entries)
            and self.ring_rows == other.ring_rows
            and self.ring_cols == other.ring_cols
        )

    def __repr__(self):
        return f"BaseMatrix({self.entries.tolist()}, rate={self.design_rate})"


def _ra_ring(repeat: int = 4, rows: int = 4) -> BaseMatrix:
    # rows-fold pre-lift of [repeat, 2]: every info node spreads its
    # repeat edges evenly over the rows, parity columns form the ring
    if repeat % rows:
        raise ValueError("repeat must be a multiple of rows")
    info = np.full((rows, rows), repeat // rows, dtype=np.int64)
    ring = np.zeros((rows, rows), dtype=np.int64)
    for t in range(rows):
        ring[t, t] += 1
        ring[(t + 1) % rows, t] += 1
    return BaseMatrix(
        np.hstack([info, ring]),
        ring_rows=tuple(range(rows)),
        ring_cols=tuple(rows + t for t in range(rows)),
    )


def ra_base(rate) -> BaseMatrix:
    """Repeat-accumulate protograph (repetition 4) at rate 1/2, 2/3 or 4/5."""
    rate = Fraction(rate).limit_denominator(100)
    if rate not in RA_RATES:
        raise ValueError(f"unsupported RA rate {rate}; choose from 1/2, 2/3, 4/5")
    if rate == Fraction(1, 2):
        return BaseMatrix([[4, 2]], ring_rows=(0,), ring_cols=(1,))
    return check_merge(_ra_ring(), rate)


def ira_base() -> BaseMatrix:
    """The rate-1/2 IRA protograph designed for Z_7 (4 checks, 8 variables)."""
    # parity columns 4..7 form the ring c0 -5- c1 -6- c2 -7- c3 -4- c0
    return BaseMatrix(IRA_Z7_RATE_HALF, ring_rows=(0, 1, 2, 3), ring_cols=(5, 6, 7, 4))


def ira_family(rate) -> BaseMatrix:
    rate = Fraction(rate).limit_denominator(100)
    base = ira_base()
    return base if rate == base.design_rate else check_merge(base, rate)


def merge_rows(base: BaseMatrix, i: int, j: int) -> BaseMatrix:
    """Merge check row ``j`` into row ``i``.

    With an accumulator ring the two rows must be ring neighbours; the
    parity column between them becomes internal to the merged check and is
    dropped.
    """
    B = base.entries
    if i == j or not (0 <= i < B.shape[0] and 0 <= j < B.shape[0]):
        raise ValueError(f"invalid row pair ({i}, {j})")
    merged = B.copy()
    merged[i] += merged[j]
    keep_rows = [r for r in range(B.shape[0]) if r != j]
    if not base.has_accumulator:
        return BaseMatrix(merged[keep_rows])

    rows, cols = list(base.ring_rows), list(base.ring_cols)
    m = len(rows)
    ti, tj = rows.index(i), rows.index(j)
    if (ti + 1) % m == tj and ti + 1 < m:
        t = ti
    elif (tj + 1) % m == ti and tj + 1 < m:
        t = tj
    else:
        raise ValueError(f"rows {i} and {j} are not joined by a non-wrapping accumulator column")
    dropped = cols[t]
    first, second = rows[t], rows[t + 1]
    del rows[t + 1]
    del cols[t]
    rows[t] = first
    keep_cols = [c for c in range(B.shape[1]) if c != dropped]
    merged = merged[np.ix_(keep_rows, keep_cols)]

    def new_row(r):
        r = i if r in (first, second) else r
        return r - (r > j)

    def new_col(c):
        return c - (c > dropped)

    return BaseMatrix(
        merged,
        ring_rows=tuple(new_row(r) for r in rows),
        ring_cols=tuple(new_col(c) for c in cols),
    )


def _default_pairs(base: BaseMatrix) -> list[tuple[int, int]]:
    order = list(base.ring_rows) if base.has_accumulator else list(range(base.n_checks))
    return [(order[t], order[t + 1]) for t in range(0, len(order) - 1, 2)]


def check_merge(base: BaseMatrix, target_rate, pairs=None) -> BaseMatrix:
    """Raise the design rate by merging check rows until it reaches ``target_rate``.

    Rounds merge neighbouring rows (1,2), (3,4), ... in ring order (index
    order for plain protographs). ``pairs`` overrides the schedule with an
    explicit list of ``(i, j)`` merges in current row indices.
    """
    target = Fraction(target_rate).limit_denominator(1000)
    if target <= base.design_rate:
        raise ValueError(f"target rate {target} is not above the design rate {base.design_rate}")
    current = base
    schedule = list(pairs) if pairs is not None else None
    while current.design_rate < target:
        if schedule is not None:
            if not schedule:
                break
            i, j = schedule.pop(0)
            current = merge_rows(current, i, j)
            continue
        if current.n_checks < 2:
            break
        # merge one pair of the round, then re-derive indices
        labels = list(range(current.n_checks))
        round_pairs = _default_pairs(current)
        for a, b in round_pairs:
            ia, ib = labels.index(a), labels.index(b)
            current = merge_rows(current, ia, ib)
            labels = [x for x in labels if x != b]
            if current.design_rate >= target:
                break
    if current.design_rate != target:
        raise ValueError(f"rate {target} is not reachable by merging (got {current.design_rate})")
    return current
