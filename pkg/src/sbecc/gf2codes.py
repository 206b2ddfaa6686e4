"""Binary linear block codes: GF(2) algebra, encoding, syndromes and alist I/O.

Bit vectors and GF(2) matrices are plain ``numpy.uint8`` arrays holding 0/1.
Batched operations accept a leading batch axis (shape ``(B, n)``).
Gaussian elimination works on rows packed into Python ints, so rank and
null-space computations stay exact for any code length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "AlistError",
    "RankDeficientError",
    "LinearCode",
    "as_bits",
    "gf2_matmul",
    "gf2_rank",
    "encode",
    "syndrome",
    "hard_decision",
    "derive_generator",
    "parse_alist",
    "serialize_alist",
    "read_alist",
    "write_alist",
    "parse_matrix_dump",
    "serialize_matrix_dump",
    "load_code",
    "BUILTIN_CODES",
]


class AlistError(ValueError):
    """Malformed alist text. ``line`` is 1-indexed (None when not line-specific)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class RankDeficientError(ValueError):
    """Raised when a parity-check matrix does not have full row rank."""

    def __init__(self, rank: int, rows: int):
        self.rank = rank
        self.rows = rows
        super().__init__(f"parity-check matrix has rank {rank} < {rows} rows")


def as_bits(a, name: str = "bits") -> np.ndarray:
    """Validate a 0/1 array and return it as uint8 (no copy when already uint8)."""
    arr = np.asarray(a)
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0/1 entries")
    return arr.astype(np.uint8, copy=False)


def gf2_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product over GF(2)."""
    # int32 accumulation: exact for inner dimensions far beyond any code length here
    return ((np.asarray(a, dtype=np.int32) @ np.asarray(b, dtype=np.int32)) & 1).astype(np.uint8)


def _pack_rows(M: np.ndarray) -> list[int]:
    # column j -> bit j of the row integer
    weights = [1 << j for j in range(M.shape[1])]
    return [sum(w for w, v in zip(weights, row) if v) for row in M.tolist()]


def gf2_rank(M) -> int:
    """Rank over GF(2) by elimination on packed rows."""
    M = as_bits(M, "matrix")
    if M.ndim != 2:
        raise ValueError("matrix must be 2-D")
    rows = _pack_rows(M)
    rank = 0
    for col in range(M.shape[1]):
        bit = 1 << col
        pivot = next((i for i in range(rank, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i] & bit:
                rows[i] ^= rows[rank]
        rank += 1
        if rank == len(rows):
            break
    return rank


def _rref_from_right(H: np.ndarray) -> tuple[list[int], list[int]]:
    """Gauss-Jordan elimination scanning columns from the right.

    Returns the reduced packed rows and the pivot column of each row. Scanning
    right-to-left makes ``H = [A | I]`` keep its identity block as the pivots,
    so the derived generator is systematic on the leading columns.
    """
    rows = _pack_rows(H)
    pivots: list[int] = []
    r = 0
    for col in range(H.shape[1] - 1, -1, -1):
        if r == len(rows):
            break
        bit = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        pivots.append(col)
        r += 1
    return rows[:r], pivots


def derive_generator(H) -> np.ndarray:
    """Generator matrix spanning the null space of a full-row-rank ``H``.

    The result is systematic on the non-pivot columns, in the original bit
    order, so ``encode`` output needs no un-permutation.
    """
    H = as_bits(H, "H")
    if H.ndim != 2 or H.shape[1] == 0:
        raise ValueError("H must be a non-empty 2-D matrix")
    m, n = H.shape
    rows, pivots = _rref_from_right(H)
    if len(pivots) < m:
        raise RankDeficientError(len(pivots), m)
    pivot_set = set(pivots)
    free = [c for c in range(n) if c not in pivot_set]
    G = np.zeros((len(free), n), dtype=np.uint8)
    for j, f in enumerate(free):
        G[j, f] = 1
        fbit = 1 << f
        for row, p in zip(rows, pivots):
            if row & fbit:
                G[j, p] = 1
    return G


@dataclass(frozen=True, eq=False)
class LinearCode:
    """An (n, k) binary linear block code with generator ``G`` and parity-check ``H``."""

    G: np.ndarray
    H: np.ndarray
    name: str = ""
    _checked: bool = field(default=True, repr=False)

    def __post_init__(self):
        G = as_bits(self.G, "G").copy()
        H = as_bits(self.H, "H").copy()
        if G.ndim != 2 or H.ndim != 2 or G.shape[1] != H.shape[1]:
            raise ValueError(f"incompatible shapes G{G.shape} H{H.shape}")
        if G.shape[0] + H.shape[0] != H.shape[1]:
            raise ValueError("G and H row counts must sum to n")
        if self._checked:
            if gf2_matmul(G, H.T).any():
                raise ValueError("G H^T != 0 over GF(2)")
            if gf2_rank(G) != G.shape[0] or gf2_rank(H) != H.shape[0]:
                raise ValueError("G and H must both have full row rank")
        G.setflags(write=False)
        H.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", H)

    @classmethod
    def from_parity_check(cls, H, name: str = "") -> "LinearCode":
        H = as_bits(H, "H")
        return cls(derive_generator(H), H, name=name)

    @property
    def n(self) -> int:
        return self.H.shape[1]

    @property
    def k(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        """Number of parity checks, n - k."""
        return self.H.shape[0]

    @property
    def rate(self) -> float:
        return self.k / self.n

    def __repr__(self) -> str:
        return f"LinearCode({self.name or 'unnamed'}, n={self.n}, k={self.k})"


def encode(message, code: LinearCode) -> np.ndarray:
    """Codeword ``x = m G`` for a message of length k (or a batch ``(B, k)``)."""
    m = as_bits(message, "message")
    if m.shape[-1] != code.k:
        raise ValueError(f"message length {m.shape[-1]} != k = {code.k}")
    return gf2_matmul(m, code.G)


def syndrome(bits, H) -> np.ndarray:
    """``H bits^T mod 2``; batched inputs give one syndrome per row."""
    b = as_bits(bits)
    H = np.asarray(H)
    if b.shape[-1] != H.shape[1]:
        raise ValueError(f"bit length {b.shape[-1]} != H columns {H.shape[1]}")
    return gf2_matmul(b, H.T)


def hard_decision(y) -> np.ndarray:
    """Bit 0 for ``y >= 0`` and bit 1 otherwise (ties go to 0)."""
    return (np.asarray(y) < 0).astype(np.uint8)


# --- alist ------------------------------------------------------------------

def _int_tokens(line: str, lineno: int) -> list[int]:
    try:
        return [int(tok) for tok in line.split()]
    except ValueError:
        bad = next(t for t in line.split() if not t.lstrip("-").isdigit())
        raise AlistError(f"non-numeric token {bad!r}", lineno) from None


def parse_alist(text: str) -> np.ndarray:
    """Parse alist text into an ``(m, n)`` parity-check matrix.

    Neighbour lists may or may not be zero padded. Blank lines are skipped.
    The column lists and row lists must describe the same matrix.
    """
    lines = [(i + 1, ln) for i, ln in enumerate(text.splitlines()) if ln.strip()]
    pos = 0

    def next_line(what: str) -> tuple[int, list[int]]:
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise AlistError(f"truncated file: expected {what}", last + 1)
        lineno, ln = lines[pos]
        pos += 1
        return lineno, _int_tokens(ln, lineno)

    lineno, head = next_line("'n m' header")
    if len(head) != 2 or min(head) <= 0:
        raise AlistError("header must be two positive integers 'n m'", lineno)
    n, m = head
    lineno, maxdeg = next_line("maximum degrees")
    if len(maxdeg) != 2:
        raise AlistError("expected two maximum degrees", lineno)
    lineno, col_deg = next_line("column degrees")
    if len(col_deg) != n:
        raise AlistError(f"expected {n} column degrees, got {len(col_deg)}", lineno)
    lineno, row_deg = next_line("row degrees")
    if len(row_deg) != m:
        raise AlistError(f"expected {m} row degrees, got {len(row_deg)}", lineno)

    H_cols = np.zeros((m, n), dtype=np.uint8)
    col_line = [0] * n
    for j in range(n):
        lineno, entries = next_line(f"neighbour list of column {j + 1}")
        col_line[j] = lineno
        nz = [e for e in entries if e != 0]
        if len(nz) != col_deg[j]:
            raise AlistError(f"column {j + 1} lists {len(nz)} checks, degree says {col_deg[j]}", lineno)
        for e in nz:
            if not 1 <= e <= m:
                raise AlistError(f"check index {e} out of range 1..{m}", lineno)
            H_cols[e - 1, j] = 1

    H_rows = np.zeros((m, n), dtype=np.uint8)
    row_line = [0] * m
    for i in range(m):
        lineno, entries = next_line(f"neighbour list of row {i + 1}")
        row_line[i] = lineno
        nz = [e for e in entries if e != 0]
        if len(nz) != row_deg[i]:
            raise AlistError(f"row {i + 1} lists {len(nz)} variables, degree says {row_deg[i]}", lineno)
        for e in nz:
            if not 1 <= e <= n:
                raise AlistError(f"variable index {e} out of range 1..{n}", lineno)
            H_rows[i, e - 1] = 1

    diff = np.argwhere(H_cols != H_rows)
    if diff.size:
        i, j = (int(v) for v in diff[0])
        raise AlistError(
            f"row list and column list disagree at entry (row {i + 1}, column {j + 1})",
            row_line[i],
        )
    return H_rows


def serialize_alist(H) -> str:
    """Zero-padded alist text for ``H``."""
    H = as_bits(H, "H")
    m, n = H.shape
    col_nb = [np.flatnonzero(H[:, j]) + 1 for j in range(n)]
    row_nb = [np.flatnonzero(H[i]) + 1 for i in range(m)]
    dv = max((len(c) for c in col_nb), default=0)
    dc = max((len(r) for r in row_nb), default=0)
    out = [f"{n} {m}", f"{dv} {dc}",
           " ".join(str(len(c)) for c in col_nb),
           " ".join(str(len(r)) for r in row_nb)]
    for nb, width in [(c, dv) for c in col_nb] + [(r, dc) for r in row_nb]:
        # degree-0 nodes still get a line ("0") so the file stays aligned
        padded = list(nb) + [0] * (max(width, 1) - len(nb))
        out.append(" ".join(str(int(v)) for v in padded))
    return "\n".join(out) + "\n"


def read_alist(path) -> np.ndarray:
    return parse_alist(Path(path).read_text())


def write_alist(H, path) -> None:
    Path(path).write_text(serialize_alist(H))


def serialize_matrix_dump(M) -> str:
    """Debug dump: ``rows cols`` header, then one line of 0/1 digits per row."""
    M = as_bits(M, "matrix")
    rows = ["".join(str(v) for v in r) for r in M.tolist()]
    return "\n".join([f"{M.shape[0]} {M.shape[1]}", *rows]) + "\n"


def parse_matrix_dump(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty matrix dump")
    r, c = (int(v) for v in lines[0].split())
    body = [ln.replace(" ", "") for ln in lines[1:]]
    if len(body) != r or any(len(ln) != c for ln in body):
        raise ValueError(f"matrix dump does not match header {r}x{c}")
    return as_bits(np.array([[int(ch) for ch in ln] for ln in body], dtype=np.uint8).reshape(r, c))


# --- bundled codes ------------------------------------------------------------

BUILTIN_CODES = {
    "hamming74": "hamming_7_4.alist",
    "repetition3": "repetition_3_1.alist",
    "bch31_16": "bch_31_16.alist",
    "ldpc49_24": "ldpc_49_24.alist",
}

_HAMMING_G = np.array(
    [[1, 0, 0, 0, 1, 1, 0],
     [0, 1, 0, 0, 1, 0, 1],
     [0, 0, 1, 0, 0, 1, 1],
     [0, 0, 0, 1, 1, 1, 1]], dtype=np.uint8)


def load_code(name: str) -> LinearCode:
    """A bundled code by name (see ``BUILTIN_CODES``) or an alist file path."""
    if name in BUILTIN_CODES:
        text = resources.files("sbecc").joinpath("data", BUILTIN_CODES[name]).read_text()
        H = parse_alist(text)
        if name == "hamming74":
            return LinearCode(_HAMMING_G, H, name=name)
        return LinearCode.from_parity_check(H, name=name)
    path = Path(name)
    if not path.exists():
        raise FileNotFoundError(f"unknown code {name!r}: not a builtin name and no such file")
    return LinearCode.from_parity_check(read_alist(path), name=path.stem)
