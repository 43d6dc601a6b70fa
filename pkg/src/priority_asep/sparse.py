"""Column-major sparse matrices over exact or floating scalars.

scipy.sparse only stores numeric dtypes, so exact rational entries need a
container of their own. Columns are dicts ``row -> value`` without explicit
zeros. Indices are 0-based internally; the text dump is 1-based to match the
basis numbering used throughout the package.
"""

from __future__ import annotations

import io
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np


def format_scalar(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


class SparseOperator:
    """Square sparse matrix stored as a list of column dicts."""

    __slots__ = ("dim", "cols")

    def __init__(self, dim: int, cols: List[Dict[int, object]] | None = None):
        self.dim = int(dim)
        if cols is None:
            cols = [{} for _ in range(self.dim)]
        if len(cols) != self.dim:
            raise ValueError("column count differs from dimension")
        self.cols = cols

    # -- construction -------------------------------------------------
    @classmethod
    def from_triplets(cls, dim: int, triplets: Iterable[Tuple[int, int, object]]) -> "SparseOperator":
        """Sum duplicate ``(row, col, value)`` entries and drop zeros."""
        cols: List[Dict[int, object]] = [{} for _ in range(dim)]
        for i, j, v in triplets:
            if not (0 <= i < dim and 0 <= j < dim):
                raise IndexError(f"entry ({i}, {j}) outside dimension {dim}")
            col = cols[j]
            col[i] = col[i] + v if i in col else v
        for col in cols:
            for i in [i for i, v in col.items() if v == 0]:
                del col[i]
        return cls(dim, cols)

    @classmethod
    def identity(cls, dim: int, one=Fraction(1)) -> "SparseOperator":
        return cls(dim, [{j: one} for j in range(dim)])

    @classmethod
    def diagonal(cls, values: Sequence) -> "SparseOperator":
        return cls(len(values), [({j: v} if v != 0 else {}) for j, v in enumerate(values)])

    @classmethod
    def permutation(cls, image: Sequence[int], one=Fraction(1)) -> "SparseOperator":
        """Matrix sending basis vector ``j`` to basis vector ``image[j]``."""
        dim = len(image)
        if sorted(image) != list(range(dim)):
            raise ValueError("image is not a permutation")
        return cls(dim, [{image[j]: one} for j in range(dim)])

    @classmethod
    def from_dense(cls, mat) -> "SparseOperator":
        rows = len(mat)
        return cls.from_triplets(rows, ((i, j, mat[i][j]) for i in range(rows) for j in range(rows) if mat[i][j] != 0))

    def copy(self) -> "SparseOperator":
        return SparseOperator(self.dim, [dict(c) for c in self.cols])

    # -- access -------------------------------------------------------
    def __getitem__(self, ij: Tuple[int, int]):
        i, j = ij
        return self.cols[j].get(i, 0)

    def triplets(self) -> Iterator[Tuple[int, int, object]]:
        """Nonzero entries ordered by ``(col, row)``."""
        for j, col in enumerate(self.cols):
            for i in sorted(col):
                yield i, j, col[i]

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self.cols)

    def diagonal_values(self) -> list:
        return [c.get(j, 0) for j, c in enumerate(self.cols)]

    def is_diagonal(self) -> bool:
        return all(set(c) <= {j} for j, c in enumerate(self.cols))

    def column_sums(self) -> list:
        return [sum(c.values(), 0) for c in self.cols]

    def max_abs(self):
        """Largest absolute entry, 0 for the zero matrix."""
        best = 0
        for c in self.cols:
            for v in c.values():
                if abs(v) > best:
                    best = abs(v)
        return best

    def is_zero(self) -> bool:
        return all(not c for c in self.cols)

    # -- algebra ------------------------------------------------------
    def _check(self, other: "SparseOperator"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        self._check(other)
        out = []
        for a, b in zip(self.cols, other.cols):
            col = dict(a)
            for i, v in b.items():
                s = col.get(i, 0) + v
                if s == 0:
                    col.pop(i, None)
                else:
                    col[i] = s
            out.append(col)
        return SparseOperator(self.dim, out)

    def __neg__(self):
        return SparseOperator(self.dim, [{i: -v for i, v in c.items()} for c in self.cols])

    def __sub__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self + (-other)

    def scale(self, s) -> "SparseOperator":
        if s == 0:
            return SparseOperator(self.dim)
        return SparseOperator(self.dim, [{i: s * v for i, v in c.items()} for c in self.cols])

    def __mul__(self, s):
        if isinstance(s, SparseOperator):
            return NotImplemented
        return self.scale(s)

    __rmul__ = __mul__

    def add_scalar(self, s) -> "SparseOperator":
        """``self + s * identity``."""
        return self + SparseOperator.diagonal([s] * self.dim)

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            out = []
            acols = self.cols
            for bcol in other.cols:
                col: Dict[int, object] = {}
                for k, bv in bcol.items():
                    for i, av in acols[k].items():
                        col[i] = col[i] + av * bv if i in col else av * bv
                out.append({i: v for i, v in col.items() if v != 0})
            return SparseOperator(self.dim, out)
        return self.matvec(other)

    def matvec(self, vec: Sequence) -> list:
        if len(vec) != self.dim:
            raise ValueError("vector length differs from dimension")
        out = [0] * self.dim
        for j, col in enumerate(self.cols):
            x = vec[j]
            if x == 0:
                continue
            for i, v in col.items():
                out[i] += v * x
        return out

    def rmatvec(self, vec: Sequence) -> list:
        """Row vector times matrix."""
        if len(vec) != self.dim:
            raise ValueError("vector length differs from dimension")
        return [sum((vec[i] * v for i, v in col.items()), 0) for col in self.cols]

    @property
    def T(self) -> "SparseOperator":
        out: List[Dict[int, object]] = [{} for _ in range(self.dim)]
        for j, col in enumerate(self.cols):
            for i, v in col.items():
                out[i][j] = v
        return SparseOperator(self.dim, out)

    def map_values(self, fn: Callable) -> "SparseOperator":
        return SparseOperator.from_triplets(self.dim, ((i, j, fn(v)) for i, j, v in self.triplets()))

    def power(self, k: int) -> "SparseOperator":
        if k < 0:
            raise ValueError("negative power")
        sample = next((v for c in self.cols for v in c.values()), Fraction(1))
        out = SparseOperator.identity(self.dim, type(sample)(1))
        base = self
        while k:
            if k & 1:
                out = out @ base
            k >>= 1
            if k:
                base = base @ base
        return out

    def inverse_diagonal(self) -> "SparseOperator":
        if not self.is_diagonal():
            raise ValueError("not a diagonal matrix")
        vals = self.diagonal_values()
        if any(v == 0 for v in vals):
            raise ZeroDivisionError("singular diagonal matrix")
        return SparseOperator.diagonal([1 / v for v in vals])

    def inverse_permutation(self) -> "SparseOperator":
        """Inverse of a scaled permutation matrix."""
        out: List[Dict[int, object]] = [{} for _ in range(self.dim)]
        for j, col in enumerate(self.cols):
            if len(col) != 1:
                raise ValueError("not a monomial matrix")
            (i, v), = col.items()
            out[i][j] = 1 / v
        if any(len(c) != 1 for c in out):
            raise ValueError("not a monomial matrix")
        return SparseOperator(self.dim, out)

    def __eq__(self, other):
        if not isinstance(other, SparseOperator):
            return NotImplemented
        return self.dim == other.dim and self.cols == other.cols

    __hash__ = None

    def to_dense(self, dtype=float) -> np.ndarray:
        if dtype is object:
            mat = np.zeros((self.dim, self.dim), dtype=object)
            mat[:] = 0
        else:
            mat = np.zeros((self.dim, self.dim), dtype=dtype)
        for i, j, v in self.triplets():
            mat[i, j] = v if dtype is object else float(v)
        return mat

    def to_scipy(self):
        from scipy.sparse import csc_matrix

        rows, cols, vals = [], [], []
        for i, j, v in self.triplets():
            rows.append(i)
            cols.append(j)
            vals.append(float(v))
        return csc_matrix((vals, (rows, cols)), shape=(self.dim, self.dim))

    # -- text dump ----------------------------------------------------
    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()

    def dump(self, stream) -> None:
        """Write ``row col value`` lines, 1-based, sorted by ``(col, row)``."""
        for i, j, v in self.triplets():
            stream.write(f"{i + 1} {j + 1} {format_scalar(v)}\n")

    @classmethod
    def loads(cls, dim: int, text: str) -> "SparseOperator":
        from .qcalc import parse_scalar

        trip = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            r, c, v = line.split()
            trip.append((int(r) - 1, int(c) - 1, parse_scalar(v)))
        return cls.from_triplets(dim, trip)

    def __repr__(self) -> str:
        return f"SparseOperator(dim={self.dim}, nnz={self.nnz})"


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b - b @ a
