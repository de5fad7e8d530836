"""Lifted (quasi-cyclic) LDPC codes over Z_p and their encoders."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..field import PrimeField, null_space
from .protograph import BaseMatrix

WRAP = -1  # marker for the one-step non-circular shift of the ring-closing column


@dataclass(frozen=True, eq=False)
class LiftedCode:
    """Parity-check code over Z_p given by its edge list.

    Edge ``e`` joins check ``edge_check[e]`` and variable ``edge_var[e]``
    with nonzero coefficient ``edge_coef[e]``. Codewords satisfy
    ``sum_e coef * c[var] = 0`` at every check.
    """

    p: int
    n_checks: int
    n: int
    edge_check: np.ndarray
    edge_var: np.ndarray
    edge_coef: np.ndarray
    Z: int = 1
    base: BaseMatrix | None = None
    chain_checks: np.ndarray | None = field(default=None, repr=False)
    chain_vars: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        PrimeField(self.p)
        for name in ("edge_check", "edge_var", "edge_coef"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.edge_coef % self.p == 0):
            raise ValueError("edge coefficients must be nonzero in Z_p")
        cells = self.edge_check * self.n + self.edge_var
        if np.unique(cells).size != cells.size:
            raise ValueError("parallel edges in the lifted graph")

    @cached_property
    def H(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.edge_coef, (self.edge_check, self.edge_var)),
            shape=(self.n_checks, self.n),
            dtype=np.int64,
        )

    @cached_property
    def _generic(self):
        G, free, _ = null_space(self.H.toarray(), self.p)
        return G, np.array(free, dtype=np.int64)

    @property
    def structured(self) -> bool:
        return self.chain_vars is not None

    @cached_property
    def info_positions(self) -> np.ndarray:
        if self.structured:
            mask = np.ones(self.n, dtype=bool)
            mask[self.chain_vars] = False
            return np.flatnonzero(mask)
        return self._generic[1]

    @property
    def k(self) -> int:
        return int(self.info_positions.size)

    @property
    def rate(self) -> float:
        return self.k / self.n

    def rate_bits(self) -> float:
        return self.rate * np.log2(self.p)

    def syndrome(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=np.int64)
        return np.asarray(self.H @ c) % self.p

    def is_codeword(self, c) -> bool:
        return not np.any(self.syndrome(c))

    def encode(self, w) -> np.ndarray:
        """Systematic encoding: the info positions of the codeword carry ``w``."""
        w = np.mod(np.asarray(w, dtype=np.int64), self.p)
        if w.shape != (self.k,):
            raise ValueError(f"message must have length k={self.k}")
        if not self.structured:
            G, _ = self._generic
            return (G @ w) % self.p
        p = self.p
        c = np.zeros(self.n, dtype=np.int64)
        c[self.info_positions] = w
        s = np.asarray(self.H @ c) % p
        # chain checks hold x_k + x_{k-1} + s_k = 0 with unit coefficients, so
        # x_k = (-1)^(k+1) * sum_{i<=k} (-1)^i s_i
        sk = s[self.chain_checks]
        signs = np.where(np.arange(sk.size) % 2 == 0, 1, -1)
        x = (-signs * (np.cumsum(signs * sk) % p)) % p
        c[self.chain_vars] = x
        return c

    def message_of(self, c) -> np.ndarray:
        """Inverse of :meth:`encode` on codewords."""
        return np.asarray(c, dtype=np.int64)[self.info_positions] % self.p

    def row_weights(self) -> np.ndarray:
        return np.bincount(self.edge_check, minlength=self.n_checks)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n)

    def has_four_cycles(self) -> bool:
        B = sp.csr_matrix(
            (np.ones(self.edge_var.size, dtype=np.int64), (self.edge_check, self.edge_var)),
            shape=(self.n_checks, self.n),
        )
        overlap = (B.T @ B).tocoo()
        off = overlap.row != overlap.col
        return bool(np.any(overlap.data[off] >= 2))

    @classmethod
    def from_parity_check(cls, H, p: int) -> LiftedCode:
        """Code with an explicit dense parity-check matrix (generic encoder)."""
        H = np.mod(np.asarray(H, dtype=np.int64), p)
        rows, cols = np.nonzero(H)
        return cls(p=p, n_checks=H.shape[0], n=H.shape[1],
                   edge_check=rows, edge_var=cols, edge_coef=H[rows, cols])


def _base_edges(base: BaseMatrix):
    """One entry per protograph edge: (row, col, kind) with kind 'info' or ring role."""
    edges = []
    fixed = {}
    if base.has_accumulator:
        m = len(base.ring_rows)
        for t, c in enumerate(base.ring_cols):
            own, nxt = base.ring_rows[t], base.ring_rows[(t + 1) % m]
            fixed.setdefault((own, c), []).append(0)
            fixed.setdefault((nxt, c), []).append(0 if t + 1 < m else WRAP)
    B = base.entries
    for i in range(B.shape[0]):
        for j in range(B.shape[1]):
            pre = fixed.get((i, j), [])
            for s in pre:
                edges.append([i, j, s, True])
            for _ in range(B[i, j] - len(pre)):
                edges.append([i, j, None, False])
    return edges


def _forbidden_shifts(e, edges, by_check, by_var, Z):
    """Shifts for edge ``e`` that would close a 2- or 4-cycle with assigned edges."""
    i, j = edges[e][0], edges[e][1]

    def shift(x):
        s = edges[x][2]
        return 1 if s == WRAP else s

    bad = set()
    for x in by_check[i]:
        if x != e and edges[x][1] == j and edges[x][2] is not None:
            bad.add(shift(x) % Z)
    # closed walks var j -e- check i -e2- var j2 -e3- check i3 -e4- var j
    for e2 in by_check[i]:
        if e2 == e or edges[e2][2] is None:
            continue
        j2 = edges[e2][1]
        for e3 in by_var[j2]:
            if e3 == e2:
                continue
            i3 = edges[e3][0]
            if e3 != e and edges[e3][2] is None:
                continue
            for e4 in by_check[i3]:
                if e4 in (e3, e) or edges[e4][1] != j or edges[e4][2] is None:
                    continue
                if e3 == e:
                    # 2 s_e = s2 + s4 (mod Z)
                    c = (shift(e2) + shift(e4)) % Z
                    sols = np.flatnonzero((2 * np.arange(Z) - c) % Z == 0)
                    bad.update(int(v) for v in sols)
                else:
                    bad.add((shift(e2) - shift(e3) + shift(e4)) % Z)
    return bad


def lift(base: BaseMatrix, Z: int, p: int, seed: int = 0) -> LiftedCode:
    """Quasi-cyclic lift of ``base`` with Z x Z permutation blocks.

    Info-edge shifts are chosen greedily (in random order) to avoid 2- and
    4-cycles where possible; accumulator edges keep the identity/one-step
    structure so encoding is a running accumulation. Info-edge coefficients
    are uniform on Z_p^*, accumulator coefficients are 1.
    """
    if Z < 1:
        raise ValueError("lift factor must be at least 1")
    PrimeField(p)
    rng = np.random.default_rng(seed)
    edges = _base_edges(base)
    if np.max(base.entries) > Z and Z > 1:
        raise ValueError("lift factor smaller than an edge multiplicity")
    by_check: dict[int, list[int]] = {}
    by_var: dict[int, list[int]] = {}
    for idx, (i, j, _, _) in enumerate(edges):
        by_check.setdefault(i, []).append(idx)
        by_var.setdefault(j, []).append(idx)

    free = [idx for idx, e in enumerate(edges) if e[2] is None]
    for idx in rng.permutation(free):
        bad = _forbidden_shifts(idx, edges, by_check, by_var, Z)
        allowed = [s for s in rng.permutation(Z) if s not in bad]
        if allowed:
            edges[idx][2] = int(allowed[0])
        else:
            # no cycle-free choice left; still never create a parallel edge
            i, j = edges[idx][0], edges[idx][1]
            taken = {edges[x][2] for x in by_check[i] if edges[x][1] == j and edges[x][2] is not None}
            options = [s for s in rng.permutation(Z) if s not in taken]
            edges[idx][2] = int(options[0]) if options else 0

    t = np.arange(Z)
    checks, vars_, coefs = [], [], []
    for i, j, s, fixed in edges:
        if s == WRAP:
            var = j * Z + t[:-1]
            chk = i * Z + t[:-1] + 1
        else:
            var = j * Z + t
            chk = i * Z + (t + s) % Z
        checks.append(chk)
        vars_.append(var)
        if fixed:
            coefs.append(np.ones(var.size, dtype=np.int64))
        else:
            coefs.append(rng.integers(1, p, size=var.size))
    edge_check = np.concatenate(checks)
    edge_var = np.concatenate(vars_)
    edge_coef = np.concatenate(coefs)

    chain_checks = chain_vars = None
    if base.has_accumulator:
        m = len(base.ring_rows)
        rows = np.asarray(base.ring_rows)
        cols = np.asarray(base.ring_cols)
        # chain position k = lift index * m + ring position
        chain_checks = (rows[None, :] * Z + t[:, None]).ravel()
        chain_vars = (cols[None, :] * Z + t[:, None]).ravel()
    return LiftedCode(
        p=p,
        n_checks=base.n_checks * Z,
        n=base.n_vars * Z,
        edge_check=edge_check,
        edge_var=edge_var,
        edge_coef=edge_coef,
        Z=Z,
        base=base,
        chain_checks=chain_checks,
        chain_vars=chain_vars,
    )


def lift_for_length(base: BaseMatrix, n: int, p: int, seed: int = 0) -> LiftedCode:
    """Lift with the smallest Z giving blocklength at least ``n``."""
    Z = -(-n // base.n_vars)
    return lift(base, Z, p, seed)


# plain-text format: "p Z Nc Nv" header, optional "base"/"ring" lines, then
# "rows cols nnz" and one "row col coeff" line per nonzero entry


def dump_matrix(rows, cols, entries, header, extra_lines=()) -> str:
    out = io.StringIO()
    out.write(" ".join(str(int(v)) for v in header) + "\n")
    for line in extra_lines:
        out.write(line + "\n")
    r, c, v = entries
    out.write(f"{rows} {cols} {len(v)}\n")
    for a, b, x in zip(r, c, v):
        out.write(f"{int(a)} {int(b)} {int(x)}\n")
    return out.getvalue()


def parse_matrix(text: str):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    header = [int(v) for v in lines[0].split()]
    extra = []
    pos = 1
    while lines[pos].split()[0].isalpha():
        extra.append(lines[pos])
        pos += 1
    rows, cols, nnz = (int(v) for v in lines[pos].split())
    body = np.array([[int(v) for v in ln.split()] for ln in lines[pos + 1:pos + 1 + nnz]],
                    dtype=np.int64).reshape(-1, 3)
    return header, extra, rows, cols, body


def dumps_base(base: BaseMatrix) -> str:
    r, c = np.nonzero(base.entries)
    extra = []
    if base.has_accumulator:
        extra.append("ring " + " ".join(map(str, base.ring_rows)) + " | "
                     + " ".join(map(str, base.ring_cols)))
    return dump_matrix(base.n_checks, base.n_vars, (r, c, base.entries[r, c]),
                       (0, 1, base.n_checks, base.n_vars), extra)


def _parse_ring(extra):
    for line in extra:
        if line.startswith("ring"):
            left, right = line[4:].split("|")
            return tuple(int(v) for v in left.split()), tuple(int(v) for v in right.split())
    return None, None


def loads_base(text: str) -> BaseMatrix:
    _, extra, rows, cols, body = parse_matrix(text)
    B = np.zeros((rows, cols), dtype=np.int64)
    B[body[:, 0], body[:, 1]] = body[:, 2]
    ring_rows, ring_cols = _parse_ring(extra)
    return BaseMatrix(B, ring_rows=ring_rows, ring_cols=ring_cols)


def dumps_code(code: LiftedCode) -> str:
    extra = []
    nc = code.base.n_checks if code.base is not None else code.n_checks
    nv = code.base.n_vars if code.base is not None else code.n
    if code.base is not None:
        extra.append("base " + " ; ".join(" ".join(map(str, row)) for row in code.base.entries.tolist()))
        if code.base.has_accumulator:
            extra.append("ring " + " ".join(map(str, code.base.ring_rows)) + " | "
                         + " ".join(map(str, code.base.ring_cols)))
    order = np.lexsort((code.edge_var, code.edge_check))
    return dump_matrix(code.n_checks, code.n,
                       (code.edge_check[order], code.edge_var[order], code.edge_coef[order]),
                       (code.p, code.Z, nc, nv), extra)


def loads_code(text: str) -> LiftedCode:
    header, extra, rows, cols, body = parse_matrix(text)
    p, Z = header[0], header[1]
    base = None
    for line in extra:
        if line.startswith("base"):
            B = [[int(v) for v in row.split()] for row in line[4:].split(";")]
            ring_rows, ring_cols = _parse_ring(extra)
            base = BaseMatrix(B, ring_rows=ring_rows, ring_cols=ring_cols)
    chain_checks = chain_vars = None
    if base is not None and base.has_accumulator:
        t = np.arange(Z)
        chain_checks = (np.asarray(base.ring_rows)[None, :] * Z + t[:, None]).ravel()
        chain_vars = (np.asarray(base.ring_cols)[None, :] * Z + t[:, None]).ravel()
    return LiftedCode(p=p, n_checks=rows, n=cols, edge_check=body[:, 0], edge_var=body[:, 1],
                      edge_coef=body[:, 2], Z=Z, base=base,
                      chain_checks=chain_checks, chain_vars=chain_vars)
