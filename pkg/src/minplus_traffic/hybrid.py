"""Hybrid standard/minplus matrix calculus (⊞ and ⊠).

Each row of a :class:`HybridMatrix` is tagged ``"s"`` (a standard linear
form, weighted sum) or ``"p"`` (a minplus linear form, min of sums).
Rather than a 2x2 block layout with every standard row first, each row
and column carries its own kind, so permuted layouts such as the Petri
net equations need no reordering.

Applied to a vector, a standard row gives ``sum_j M_ij x_j`` and a minplus
row gives ``min_j (M_ij + x_j)``.  Column kinds only matter for the
matrix-matrix product, where they must match the row kinds of the right
operand.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .extended import minplus_matmul, minplus_matvec, std_matmul, std_matvec, xadd

STD, MP = "s", "p"


def _kinds(kinds: Iterable[str]) -> tuple[str, ...]:
    out = tuple(kinds)
    bad = [k for k in out if k not in (STD, MP)]
    if bad:
        raise ValueError(f"row/column kinds must be 's' or 'p', got {bad}")
    return out


@dataclass(frozen=True, eq=False)
class HybridMatrix:
    entries: np.ndarray
    row_kinds: tuple[str, ...]
    col_kinds: tuple[str, ...] = field(default=None)

    def __post_init__(self):
        M = np.array(self.entries, dtype=float)
        rk = _kinds(self.row_kinds)
        ck = _kinds(self.col_kinds if self.col_kinds is not None else self.row_kinds)
        if M.size == 0:
            M = M.reshape(len(rk), len(ck))
        if M.shape != (len(rk), len(ck)):
            raise ValueError(f"entries shape {M.shape} does not match partition {len(rk)}x{len(ck)}")
        if np.isnan(M).any():
            raise ValueError("NaN entry")
        M.setflags(write=False)
        object.__setattr__(self, "entries", M)
        object.__setattr__(self, "row_kinds", rk)
        object.__setattr__(self, "col_kinds", ck)
        mp_rows = np.array([k == MP for k in rk], dtype=bool)
        if mp_rows.any() and np.any(M[mp_rows] == -np.inf):
            warnings.warn("-inf entry in a minplus row", RuntimeWarning, stacklevel=3)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def std_rows(self) -> np.ndarray:
        return np.array([k == STD for k in self.row_kinds], dtype=bool)

    def __eq__(self, other):
        if not isinstance(other, HybridMatrix):
            return NotImplemented
        return (self.row_kinds == other.row_kinds and self.col_kinds == other.col_kinds
                and np.array_equal(self.entries, other.entries))

    def __repr__(self):
        return f"HybridMatrix(rows={''.join(self.row_kinds)}, cols={''.join(self.col_kinds)}, entries={self.entries.tolist()})"


def null(row_kinds: Sequence[str], col_kinds: Sequence[str]) -> HybridMatrix:
    """The ⊞ null element: 0 in standard rows, ε in minplus rows."""
    rk = _kinds(row_kinds)
    M = np.zeros((len(rk), len(col_kinds)))
    M[[k == MP for k in rk]] = np.inf
    return HybridMatrix(M, rk, tuple(col_kinds))


def block(rows: Sequence[Sequence[HybridMatrix | None]], row_kinds: Sequence[Sequence[str]],
          col_kinds: Sequence[Sequence[str]]) -> HybridMatrix:
    """Assemble a block matrix; ``None`` blocks are filled with the null element."""
    strips = []
    for bi, brow in enumerate(rows):
        parts = []
        for bj, blk in enumerate(brow):
            if blk is None:
                blk = null(row_kinds[bi], col_kinds[bj])
            elif blk.shape != (len(row_kinds[bi]), len(col_kinds[bj])):
                raise ValueError(f"block ({bi},{bj}) has shape {blk.shape}")
            parts.append(blk.entries)
        strips.append(np.hstack(parts) if parts else np.zeros((len(row_kinds[bi]), 0)))
    rk = tuple(k for ks in row_kinds for k in ks)
    ck = tuple(k for ks in col_kinds for k in ks)
    M = np.vstack(strips) if strips else np.zeros((0, len(ck)))
    return HybridMatrix(M.reshape(len(rk), len(ck)), rk, ck)


def hplus(M1: HybridMatrix, M2: HybridMatrix) -> HybridMatrix:
    """⊞: standard rows add, minplus rows take the elementwise minimum."""
    if M1.row_kinds != M2.row_kinds or M1.col_kinds != M2.col_kinds:
        raise ValueError("⊞ needs identical partitions")
    s = M1.std_rows
    out = np.where(s[:, None], xadd(M1.entries, M2.entries), np.minimum(M1.entries, M2.entries))
    return HybridMatrix(out, M1.row_kinds, M1.col_kinds)


def htimes_vec(M: HybridMatrix, x) -> np.ndarray:
    """``M ⊠ x``.  ``x`` may carry leading batch dimensions."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != M.shape[1]:
        raise ValueError(f"vector length {x.shape[-1]} does not match {M.shape[1]} columns")
    s = M.std_rows
    out = np.empty(x.shape[:-1] + (M.shape[0],))
    if s.any():
        out[..., s] = std_matvec(M.entries[s], x)
    if (~s).any():
        out[..., ~s] = minplus_matvec(M.entries[~s], x)
    return out


def htimes_mat(M1: HybridMatrix, M2: HybridMatrix) -> HybridMatrix:
    """``M1 ⊠ M2`` by the block formula.

    Each result row follows the algebra of the corresponding row of ``M1``.
    """
    if M1.col_kinds != M2.row_kinds:
        raise ValueError("⊠ needs the column partition of the left operand to match the row partition of the right")
    s = M1.std_rows
    out = np.empty((M1.shape[0], M2.shape[1]))
    if s.any():
        out[s] = std_matmul(M1.entries[s], M2.entries)
    if (~s).any():
        out[~s] = minplus_matmul(M1.entries[~s], M2.entries)
    return HybridMatrix(out, M1.row_kinds, M2.col_kinds)


def is_homogeneous(M: HybridMatrix, tol: float = 1e-12) -> bool:
    """True iff every standard row's finite coefficients sum to 1."""
    for i in np.flatnonzero(M.std_rows):
        row = M.entries[i]
        if abs(row[np.isfinite(row)].sum() - 1.0) > tol:
            return False
    return True


def is_monotone(M: HybridMatrix) -> bool:
    """True iff all finite standard coefficients are nonnegative."""
    rows = M.entries[M.std_rows]
    return bool(np.all(rows[np.isfinite(rows)] >= 0))


def apply_stages(stages: Sequence[HybridMatrix], x) -> np.ndarray:
    """Apply ``stages[0]`` first, then the next one to its result, and so on."""
    for M in stages:
        x = htimes_vec(M, x)
    return x


# ⊠ is not associative.  Rows: (standard, minplus).
# (W ⊠ W) ⊠ x = (0.25, 1) while W ⊠ (W ⊠ x) = (0.75, 1).
NON_ASSOCIATIVE_WITNESS = (
    HybridMatrix(np.array([[0.5, 0.5], [1.0, 0.0]]), (STD, MP), (STD, MP)),
    np.array([0.0, 1.0]),
)


# ---------------------------------------------------------------------------
# text format
#
#   rows: s p
#   cols: s p
#   0.5 0.5
#   1   inf


def format_number(x: float) -> str:
    if x == np.inf:
        return "inf"
    if x == -np.inf:
        return "-inf"
    return repr(float(x))


def parse_grid(lines: Sequence[str], ncols: int | None = None) -> np.ndarray:
    rows = []
    for ln in lines:
        toks = ln.split()
        if not toks:
            continue
        try:
            rows.append([float(t) for t in toks])
        except ValueError as exc:
            raise ValueError(f"bad matrix entry in line {ln!r}") from exc
    if not rows:
        return np.zeros((0, ncols or 0))
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValueError("ragged matrix rows")
    M = np.array(rows, dtype=float)
    if np.isnan(M).any():
        raise ValueError("nan is not a valid entry")
    return M


def format_grid(M: np.ndarray) -> str:
    return "\n".join(" ".join(format_number(v) for v in row) for row in np.asarray(M))


def parse_hybrid(text: str) -> HybridMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    header = {}
    while lines and ":" in lines[0]:
        key, _, val = lines.pop(0).partition(":")
        header[key.strip()] = val.split()
    if "rows" not in header:
        raise ValueError("missing 'rows:' header")
    rk = header["rows"]
    ck = header.get("cols", rk)
    M = parse_grid(lines, len(ck))
    if M.size == 0:
        M = M.reshape(len(rk), len(ck))
    return HybridMatrix(M, rk, ck)


def format_hybrid(M: HybridMatrix) -> str:
    head = f"rows: {' '.join(M.row_kinds)}\ncols: {' '.join(M.col_kinds)}\n"
    return head + format_grid(M.entries) + "\n"
