"""Linear equality constraints <d_i, x> = h_i as a sparse system.

The system is stored row-compressed with a column index built once at
construction; it is immutable afterwards and safe to share between runs.
Proximity is the sum of squared residuals.
"""

import numpy as np


class SparseRow:
    """One constraint row: (column, coefficient) entries sorted by column.

    Column indices must be strictly increasing and coefficients nonzero.
    An empty row is permitted here; build_system rejects or drops it.
    """

    __slots__ = ("cols", "vals")

    def __init__(self, entries):
        if len(entries):
            cols = np.asarray([e[0] for e in entries], dtype=np.int64)
            vals = np.asarray([e[1] for e in entries], dtype=np.float64)
        else:
            cols = np.empty(0, dtype=np.int64)
            vals = np.empty(0, dtype=np.float64)
        if cols.size:
            if np.any(np.diff(cols) <= 0):
                raise ValueError("column indices must be strictly increasing")
            if cols[0] < 0:
                raise ValueError("negative column index")
            if np.any(vals == 0.0):
                raise ValueError("zero coefficients must not be stored")
        self.cols = cols
        self.vals = vals

    @classmethod
    def from_arrays(cls, cols, vals):
        row = cls.__new__(cls)
        row.cols = np.asarray(cols, dtype=np.int64)
        row.vals = np.asarray(vals, dtype=np.float64)
        return row

    def entries(self):
        return list(zip(self.cols.tolist(), self.vals.tolist()))

    def norm_sq(self):
        return float(np.dot(self.vals, self.vals))

    def __len__(self):
        return self.cols.size

    def __eq__(self, other):
        return (
            isinstance(other, SparseRow)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.vals, other.vals)
        )


class ImageVector:
    """Dense length-J vector interpreted as a W x H image, row-major.

    Pixel (row, col) lives at index j = row*W + col; row 0 is the top row.
    """

    __slots__ = ("values", "width", "height")

    def __init__(self, values, width, height):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if width <= 0 or height <= 0:
            raise ValueError("width and height must be positive")
        if values.ndim != 1 or values.size != width * height:
            raise ValueError(f"expected {width * height} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("image values must be finite")
        self.values = values
        self.width = width
        self.height = height

    @classmethod
    def zeros(cls, width, height):
        return cls(np.zeros(width * height), width, height)

    def copy(self):
        return ImageVector(self.values.copy(), self.width, self.height)

    def as_grid(self):
        return self.values.reshape(self.height, self.width)

    def __len__(self):
        return self.values.size


def _as_values(x, J):
    values = x.values if isinstance(x, ImageVector) else np.asarray(x, dtype=np.float64)
    if values.ndim != 1 or values.size != J:
        raise ValueError(f"dimension mismatch: expected length {J}, got {values.size}")
    return values


def _row_dots(indptr, indices, data, values):
    # <d_i, x> for all rows; the same reduction is used when generating h,
    # so a consistently built system has exactly zero residuals at x-hat.
    return np.add.reduceat(data * values[indices], indptr[:-1])


class ConstraintSystem:
    """Immutable sparse system of I linear equalities over R^J."""

    def __init__(self, J, indptr, indices, data, rhs, ray_ids=None, dropped_rows=0):
        self.J = int(J)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.rhs = np.ascontiguousarray(rhs, dtype=np.float64)
        self.dropped_rows = int(dropped_rows)
        I = self.rhs.size
        if I < 1:
            raise ValueError("a system needs at least one row")
        if self.indptr.size != I + 1 or self.indptr[0] != 0 or self.indptr[-1] != self.data.size:
            raise ValueError("malformed row pointer array")
        if self.indices.size != self.data.size:
            raise ValueError("indices/data length mismatch")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.J:
                raise ValueError("column index out of range")
            ok = np.ones(self.indices.size, dtype=bool)
            ok[1:] = self.indices[1:] > self.indices[:-1]
            ok[self.indptr[1:-1]] = True
            if not ok.all():
                raise ValueError("column indices must be strictly increasing within a row")
            if np.any(self.data == 0.0):
                raise ValueError("zero coefficients must not be stored")
        self.norms_sq = np.add.reduceat(self.data * self.data, self.indptr[:-1])
        if np.any(self.norms_sq <= 0.0) or np.any(self.indptr[1:] == self.indptr[:-1]):
            raise ValueError("zero-norm row in system")
        if ray_ids is None:
            ray_ids = np.arange(I, dtype=np.int64)
        self.ray_ids = np.ascontiguousarray(ray_ids, dtype=np.int64)
        if self.ray_ids.size != I:
            raise ValueError("ray_ids length mismatch")
        self._build_columns()

    @property
    def I(self):
        return self.rhs.size

    @property
    def nnz(self):
        return self.data.size

    def _build_columns(self):
        # stable argsort by column keeps rows ascending inside each column,
        # giving a deterministic transpose
        counts = np.bincount(self.indices, minlength=self.J)
        self.col_indptr = np.zeros(self.J + 1, dtype=np.int64)
        np.cumsum(counts, out=self.col_indptr[1:])
        row_of = np.repeat(np.arange(self.I, dtype=np.int64), np.diff(self.indptr))
        order = np.argsort(self.indices, kind="stable")
        self.col_rows = np.ascontiguousarray(row_of[order])
        self.col_data = np.ascontiguousarray(self.data[order])

    def row(self, i):
        a, b = self.indptr[i], self.indptr[i + 1]
        return SparseRow.from_arrays(self.indices[a:b].copy(), self.data[a:b].copy())

    def column(self, j):
        a, b = self.col_indptr[j], self.col_indptr[j + 1]
        return self.col_rows[a:b].copy(), self.col_data[a:b].copy()

    def row_dots(self, x):
        return _row_dots(self.indptr, self.indices, self.data, _as_values(x, self.J))


def build_system(rows, rhs, J, zero_row_policy="drop", ray_ids=None):
    """Assemble a ConstraintSystem from SparseRow objects and right-hand sides.

    Row order is preserved (it matters for the sequential sweep operator).
    Zero-norm rows are dropped with an audit count by default; the "reject"
    policy raises instead.
    """
    if zero_row_policy not in ("drop", "reject"):
        raise ValueError(f"unknown zero_row_policy {zero_row_policy!r}")
    rows = list(rows)
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.ndim != 1 or rhs.size != len(rows):
        raise ValueError("dimension mismatch: rows and rhs lengths differ")
    if ray_ids is None:
        ray_ids = np.arange(len(rows), dtype=np.int64)
    else:
        ray_ids = np.asarray(ray_ids, dtype=np.int64)

    kept, kept_rhs, kept_ids = [], [], []
    dropped = 0
    for row, h, rid in zip(rows, rhs, ray_ids):
        if row.cols.size and row.cols[-1] >= J:
            raise ValueError("column index exceeds vector dimension")
        if row.cols.size == 0:
            if zero_row_policy == "reject":
                raise ValueError("zero-norm row rejected")
            dropped += 1
            continue
        kept.append(row)
        kept_rhs.append(float(h))
        kept_ids.append(int(rid))
    if not kept:
        raise ValueError("all rows were zero; nothing to build")

    indptr = np.zeros(len(kept) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([r.cols.size for r in kept])
    indices = np.concatenate([r.cols for r in kept])
    data = np.concatenate([r.vals for r in kept])
    return ConstraintSystem(
        J, indptr, indices, data, np.asarray(kept_rhs), np.asarray(kept_ids), dropped
    )


def residuals(system, x):
    """r_i = <d_i, x> - h_i for every row."""
    return system.row_dots(x) - system.rhs


def proximity(system, x):
    """Sum of squared residuals (nonnegative; zero only at exact solutions).

    numpy's pairwise summation keeps the accumulation error small for the
    large row counts the generator produces.
    """
    r = residuals(system, x)
    return float(np.sum(r * r))


def write_system(system, path):
    """Text form: header "J I", then one row per line "i nnz j:value ... h"."""
    with open(path, "w") as fh:
        fh.write(f"{system.J} {system.I}\n")
        for i in range(system.I):
            a, b = system.indptr[i], system.indptr[i + 1]
            parts = [str(i), str(b - a)]
            parts.extend(
                f"{j}:{v!r}" for j, v in zip(system.indices[a:b].tolist(), system.data[a:b].tolist())
            )
            parts.append(repr(float(system.rhs[i])))
            fh.write(" ".join(parts) + "\n")


def read_system(path):
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed system header")
        J, I = int(header[0]), int(header[1])
        rows, rhs = [], []
        for line in fh:
            fields = line.split()
            if not fields:
                continue
            nnz = int(fields[1])
            if len(fields) != 2 + nnz + 1:
                raise ValueError(f"{path}: malformed row {fields[0]}")
            entries = []
            for tok in fields[2 : 2 + nnz]:
                j, _, v = tok.partition(":")
                entries.append((int(j), float(v)))
            rows.append(SparseRow(entries))
            rhs.append(float(fields[-1]))
    if len(rows) != I:
        raise ValueError(f"{path}: expected {I} rows, found {len(rows)}")
    return build_system(rows, rhs, J, zero_row_policy="reject")
