"""Minimal sparse-matrix layer for the coupled nonsymmetric Jacobian.

Compressed-row matrices built from scatter-add triplets, a direct LU solve
with a fill-reducing ordering, and Dirichlet elimination that replaces
constrained rows by identity and moves the known column products to the
right-hand side (so residual norms stay meaningful and symmetric blocks stay
symmetric). Factorization is delegated to SuperLU via scipy.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

SOLVE_TOL = 1e-10          # relative residual guaranteed by solve()
PIVOT_TOL = 1e-14          # pivot / max|A| threshold for singularity reporting


class SingularMatrixError(RuntimeError):
    """Raised when factorization hits a (numerically) zero pivot."""


class SparseMatrix:
    """Square CSR matrix. Immutable after construction.

    Attributes
    ----------
    n : int
        Matrix dimension.
    row_offsets, col_indices, values : ndarray
        Standard CSR arrays; column indices are sorted and unique per row.
    """

    def __init__(self, csr):
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"SparseMatrix must be square, got shape {csr.shape}")
        if csr.shape[0] < 1:
            raise ValueError("SparseMatrix dimension must be >= 1")
        csr = csr.tocsr()
        csr.sum_duplicates()
        csr.sort_indices()
        if not np.all(np.isfinite(csr.data)):
            raise ValueError("SparseMatrix entries must be finite")
        self._csr = csr

    @property
    def n(self):
        return self._csr.shape[0]

    @property
    def shape(self):
        return self._csr.shape

    @property
    def row_offsets(self):
        return self._csr.indptr

    @property
    def col_indices(self):
        return self._csr.indices

    @property
    def values(self):
        return self._csr.data

    def matvec(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"matvec: vector length {v.shape} does not match n={self.n}")
        return self._csr @ v

    def toarray(self):
        return self._csr.toarray()

    def scipy_csr(self):
        return self._csr


def from_triplets(n, entries):
    """Assemble an n x n SparseMatrix from (row, col, value) triplets.

    Duplicate (row, col) pairs are summed (scatter-add), which is what
    element-by-element assembly requires. ``entries`` may be a list of
    triplets or a (rows, cols, values) tuple of arrays.
    """
    if isinstance(entries, tuple) and len(entries) == 3:
        rows, cols, vals = (np.asarray(a) for a in entries)
    else:
        entries = list(entries)
        if entries:
            rows, cols, vals = (np.asarray(a) for a in zip(*entries))
        else:
            rows = cols = np.zeros(0, dtype=int)
            vals = np.zeros(0)
    rows = rows.astype(np.int64, copy=False)
    cols = cols.astype(np.int64, copy=False)
    if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= n):
        raise IndexError(f"from_triplets: index outside [0, {n})")
    csr = sp.coo_matrix((vals.astype(float), (rows, cols)), shape=(n, n)).tocsr()
    return SparseMatrix(csr)


def solve(A, b):
    """Solve A x = b by sparse LU with partial pivoting.

    Guarantees ||A x - b||_2 <= 1e-10 ||b||_2 (iterative refinement is
    applied if the factored solve falls short). The matrix is row-equilibrated
    before factoring -- the solution is unchanged, but pivot magnitudes become
    comparable across physics blocks with wildly different units -- and a
    numerically singular matrix (equilibrated pivot below 1e-14 * max|A|)
    raises SingularMatrixError instead of returning garbage.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError(f"solve: rhs length {b.shape} does not match n={A.n}")
    csr = A.scipy_csr()
    if A.values.size == 0 or np.max(np.abs(A.values)) == 0.0:
        raise SingularMatrixError("solve: matrix is identically zero")

    row_max = np.zeros(A.n)
    np.maximum.at(row_max, np.repeat(np.arange(A.n), np.diff(A.row_offsets)),
                  np.abs(A.values))
    if np.any(row_max == 0.0):
        raise SingularMatrixError(
            f"solve: zero row at index {int(np.flatnonzero(row_max == 0.0)[0])}")
    d = 1.0 / row_max
    scaled = sp.csr_matrix(
        (A.values * np.repeat(d, np.diff(A.row_offsets)), A.col_indices, A.row_offsets),
        shape=(A.n, A.n))
    try:
        lu = splu(scaled.tocsc())
    except RuntimeError as err:  # SuperLU reports exact singularity this way
        raise SingularMatrixError(f"solve: factorization failed ({err})") from err
    u_diag = np.abs(lu.U.diagonal())
    scaled_max = np.abs(scaled.data).max()
    if u_diag.size and u_diag.min() < PIVOT_TOL * scaled_max:
        raise SingularMatrixError(
            f"solve: pivot {u_diag.min():.3e} below {PIVOT_TOL:.0e} * max|A| "
            f"= {PIVOT_TOL * scaled_max:.3e} after row equilibration")

    x = lu.solve(d * b)
    db_norm = np.linalg.norm(d * b)
    if db_norm > 0.0:
        for _ in range(4):
            dr = d * (b - A.matvec(x))
            if np.linalg.norm(dr) <= SOLVE_TOL * db_norm:
                break
            x = x + lu.solve(dr)
        else:
            # Refinement has hit its float64 floor; accept only while the
            # normwise backward error of the equilibrated system (whose rows
            # all have unit max) stays at roundoff level.
            dr = d * (b - A.matvec(x))
            eta = np.linalg.norm(dr) / (np.linalg.norm(x) + db_norm)
            if eta > 1e-9:
                raise SingularMatrixError(
                    f"solve: backward error {eta:.3e} after refinement; "
                    "matrix is effectively singular")
    return x


def apply_dirichlet(A, b, constraints):
    """Impose dof values on the system; returns new (A, b).

    Constrained rows become identity rows with the prescribed value on the
    right-hand side; constrained columns are eliminated by moving the known
    products to the right-hand side. Conflicting duplicate constraints on
    one dof raise ValueError; re-applying the same constraint set is a
    no-op on the already-constrained system.
    """
    b = np.asarray(b, dtype=float).copy()
    if b.shape != (A.n,):
        raise ValueError(f"apply_dirichlet: rhs length {b.shape} does not match n={A.n}")

    fixed = {}
    for dof, value in constraints:
        dof = int(dof)
        if dof < 0 or dof >= A.n:
            raise IndexError(f"apply_dirichlet: dof {dof} outside [0, {A.n})")
        if dof in fixed and fixed[dof] != value:
            raise ValueError(f"apply_dirichlet: conflicting constraints on dof {dof}: "
                             f"{fixed[dof]} vs {value}")
        fixed[dof] = float(value)
    if not fixed:
        return A, b

    dofs = np.fromiter(fixed.keys(), dtype=np.int64)
    vals = np.fromiter(fixed.values(), dtype=float)
    mask = np.zeros(A.n, dtype=bool)
    mask[dofs] = True

    # Move known column products to the RHS before dropping the columns.
    csr = A.scipy_csr()
    full_vals = np.zeros(A.n)
    full_vals[dofs] = vals
    b -= csr @ full_vals

    coo = csr.tocoo()
    keep = ~mask[coo.row] & ~mask[coo.col]
    rows = np.concatenate([coo.row[keep], dofs])
    cols = np.concatenate([coo.col[keep], dofs])
    data = np.concatenate([coo.data[keep], np.ones(dofs.size)])
    A_new = SparseMatrix(sp.coo_matrix((data, (rows, cols)), shape=(A.n, A.n)).tocsr())

    b[dofs] = vals
    return A_new, b
