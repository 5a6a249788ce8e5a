"""GOE instances in the StQP normalization and the ordered coordinate system.

Diagonal entries are N(0, 1) and off-diagonal entries N(0, 1/2), all
upper-triangular entries independent.  Indices are 0-based throughout.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as _k
from .rng import SeedSpec
from .validation import check_int, check_symmetric_matrix


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GoeMatrix:
    """A symmetric StQP data matrix."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(check_symmetric_matrix(self.entries, tol=0.0)))

    @property
    def n(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __getitem__(self, key):
        return self.entries[key]

    def __repr__(self):
        return f"GoeMatrix(n={self.n})"


@dataclass(frozen=True, eq=False)
class OrderedInstance:
    """Diagonal order statistics with the matching relabelled off-diagonals.

    ``z[r]`` is the r-th smallest diagonal entry, ``perm[r]`` its original
    index, and ``x_off[i, j] = Q[perm[i], perm[j]]`` for ``i != j`` (the
    diagonal of ``x_off`` is zero).
    """

    z: np.ndarray = field(repr=False)
    perm: np.ndarray = field(repr=False)
    x_off: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.z.shape[0]

    def reconstruct(self):
        n = self.n
        q = np.empty((n, n))
        q[np.ix_(self.perm, self.perm)] = self.x_off
        q[self.perm, self.perm] = self.z
        return GoeMatrix(q)


def as_matrix(q):
    """Accept a GoeMatrix or anything array-like and return a float array."""
    if isinstance(q, GoeMatrix):
        return q.entries
    return check_symmetric_matrix(q)


def sample_goe(n, stream):
    """Draw one GOE matrix from ``stream`` by inverse transform.

    Draws 0..n-1 are the diagonal, then the upper triangle row by row, each
    mapped through the normal quantile; results are bit-reproducible.
    """
    n = check_int(n, "n", minimum=1)
    if not isinstance(stream, SeedSpec):
        raise TypeError("stream must be a SeedSpec (see derive_stream)")
    out = np.empty((n, n))
    _k.sample_goe_into(np.uint64(stream.seed), np.uint64(stream.sample_index), n, out)
    return GoeMatrix(out)


def order_instance(q):
    q = as_matrix(q)
    diag = np.diag(q)
    perm = np.argsort(diag, kind="stable")
    x_off = q[np.ix_(perm, perm)].copy()
    np.fill_diagonal(x_off, 0.0)
    return OrderedInstance(z=_frozen(diag[perm]), perm=perm, x_off=_frozen(x_off))


def read_matrix_csv(path):
    """Load a comma-separated matrix, one row per line; asymmetry averaged."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return GoeMatrix(check_symmetric_matrix(data, tol=1e-12))


def write_matrix_csv(q, path):
    np.savetxt(path, as_matrix(q), delimiter=",", fmt="%.17g")
