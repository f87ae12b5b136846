"""Exact rational matrices: rank, nullspace, linear solve.

Plain fraction-by-fraction Gaussian elimination.  Matrices are stored
densely below 64x64 and as a coordinate dict above, which covers the
sizes this package produces (Lie examples in dim <= 6 give blocks with a
few hundred columns).  Elimination always runs on dense row copies; the
split only matters for storage.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)

DENSE_LIMIT = 64


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class RationalMatrix:
    """Immutable exact matrix over Q."""

    __slots__ = ("rows", "cols", "_dense", "_data")

    def __init__(self, rows: int, cols: int,
                 entries: Mapping[tuple[int, int], object] | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimensions")
        self.rows = rows
        self.cols = cols
        self._dense = rows <= DENSE_LIMIT and cols <= DENSE_LIMIT
        if self._dense:
            data = [[ZERO] * cols for _ in range(rows)]
            if entries:
                for (i, j), v in entries.items():
                    self._check_index(i, j)
                    data[i][j] = _frac(v)
            self._data = data
        else:
            data = {}
            if entries:
                for (i, j), v in entries.items():
                    self._check_index(i, j)
                    v = _frac(v)
                    if v != 0:
                        data[(i, j)] = v
            self._data = data

    def _check_index(self, i: int, j: int):
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i},{j}) outside {self.rows}x{self.cols}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[object]]) -> "RationalMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        entries = {}
        for i, row in enumerate(rows):
            if len(row) != c:
                raise ValueError("ragged rows")
            for j, v in enumerate(row):
                v = _frac(v)
                if v != 0:
                    entries[(i, j)] = v
        return cls(r, c, entries)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, {(i, i): ONE for i in range(n)})

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols)

    def get(self, i: int, j: int) -> Fraction:
        self._check_index(i, j)
        if self._dense:
            return self._data[i][j]
        return self._data.get((i, j), ZERO)

    def row(self, i: int) -> list[Fraction]:
        if self._dense:
            return list(self._data[i])
        out = [ZERO] * self.cols
        for (r, c), v in self._data.items():
            if r == i:
                out[c] = v
        return out

    def to_rows(self) -> list[list[Fraction]]:
        return [self.row(i) for i in range(self.rows)]

    def items(self) -> Iterable[tuple[tuple[int, int], Fraction]]:
        if self._dense:
            for i, row in enumerate(self._data):
                for j, v in enumerate(row):
                    if v != 0:
                        yield (i, j), v
        else:
            yield from self._data.items()

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(self.cols, self.rows,
                              {(j, i): v for (i, j), v in self.items()})

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        self._check_same_shape(other)
        entries = dict(self.items())
        for ij, v in other.items():
            entries[ij] = entries.get(ij, ZERO) + v
        return RationalMatrix(self.rows, self.cols, entries)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + other.scaled(-1)

    def scaled(self, scalar) -> "RationalMatrix":
        c = _frac(scalar)
        return RationalMatrix(self.rows, self.cols,
                              {ij: v * c for ij, v in self.items()})

    def _check_same_shape(self, other: "RationalMatrix"):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError(
                f"shape mismatch {self.rows}x{self.cols} vs {other.rows}x{other.cols}")

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError(
                f"cannot multiply {self.rows}x{self.cols} by {other.rows}x{other.cols}")
        # group the left factor by column to stay sparse-friendly
        left_by_col: dict[int, list[tuple[int, Fraction]]] = {}
        for (i, k), v in self.items():
            left_by_col.setdefault(k, []).append((i, v))
        entries: dict[tuple[int, int], Fraction] = {}
        for (k, j), w in other.items():
            for i, v in left_by_col.get(k, ()):
                ij = (i, j)
                entries[ij] = entries.get(ij, ZERO) + v * w
        return RationalMatrix(self.rows, other.cols, entries)

    def matvec(self, vec: Sequence[object]) -> list[Fraction]:
        if len(vec) != self.cols:
            raise ValueError("vector length mismatch")
        vec = [_frac(v) for v in vec]
        out = [ZERO] * self.rows
        for (i, j), v in self.items():
            if vec[j] != 0:
                out[i] += v * vec[j]
        return out

    def is_zero(self) -> bool:
        return all(v == 0 for _, v in self.items())

    def norm_inf(self) -> Fraction:
        """Operator norm for the max norm: largest absolute row sum."""
        sums: dict[int, Fraction] = {}
        for (i, _), v in self.items():
            sums[i] = sums.get(i, ZERO) + abs(v)
        return max(sums.values(), default=ZERO)

    def to_float_rows(self) -> list[list[float]]:
        return [[float(v) for v in self.row(i)] for i in range(self.rows)]

    def __eq__(self, other):
        return (isinstance(other, RationalMatrix)
                and (self.rows, self.cols) == (other.rows, other.cols)
                and dict(self.items()) == dict(other.items()))

    def __repr__(self):
        return f"RationalMatrix({self.rows}x{self.cols})"

    # -- elimination-backed queries ------------------------------------

    def _echelon(self) -> tuple[list[list[Fraction]], list[int]]:
        """Reduced row echelon form and pivot column list."""
        m = self.to_rows()
        pivots = []
        r = 0
        for c in range(self.cols):
            pr = next((i for i in range(r, self.rows) if m[i][c] != 0), None)
            if pr is None:
                continue
            m[r], m[pr] = m[pr], m[r]
            inv = ONE / m[r][c]
            m[r] = [v * inv for v in m[r]]
            for i in range(self.rows):
                if i != r and m[i][c] != 0:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
            if r == self.rows:
                break
        return m, pivots

    def rank(self) -> int:
        return len(self._echelon()[1])

    def nullspace_basis(self) -> list[list[Fraction]]:
        """Basis of the kernel, one vector per free column."""
        m, pivots = self._echelon()
        free = [c for c in range(self.cols) if c not in pivots]
        basis = []
        for fc in free:
            v = [ZERO] * self.cols
            v[fc] = ONE
            for r, pc in enumerate(pivots):
                v[pc] = -m[r][fc]
            basis.append(v)
        return basis

    def solve(self, rhs: Sequence[object]) -> list[Fraction] | None:
        """One exact solution of A x = rhs, or None when inconsistent."""
        if len(rhs) != self.rows:
            raise ValueError("rhs length mismatch")
        col = RationalMatrix(self.rows, 1,
                             {(i, 0): _frac(v) for i, v in enumerate(rhs)})
        sol = self.solve_matrix(col)
        if sol is None:
            return None
        return [sol.get(i, 0) for i in range(self.cols)]

    def solve_matrix(self, rhs: "RationalMatrix") -> "RationalMatrix | None":
        """Solve A X = B for all columns at once; None if inconsistent."""
        if rhs.rows != self.rows:
            raise ValueError("shape mismatch")
        aug = RationalMatrix(self.rows, self.cols + rhs.cols,
                             dict(self.items())
                             | {(i, self.cols + j): v for (i, j), v in rhs.items()})
        m, pivots = aug._echelon()
        rank = len([c for c in pivots if c < self.cols])
        if rank < len(pivots):
            return None  # a pivot landed in the augmented block
        entries = {}
        for r, pc in enumerate(pivots):
            for j in range(rhs.cols):
                v = m[r][self.cols + j]
                if v != 0:
                    entries[(pc, j)] = v
        return RationalMatrix(self.cols, rhs.cols, entries)

    def inverse(self) -> "RationalMatrix":
        if self.rows != self.cols:
            raise ValueError("not square")
        inv = self.solve_matrix(RationalMatrix.identity(self.rows))
        if inv is None:
            raise ValueError("matrix is singular")
        return inv
