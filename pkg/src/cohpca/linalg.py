"""Numeric core: column normalization, coherence profiles, subspace bases.

Conventions used throughout the package:

* data matrices are float64 arrays of shape (m, n), one observation per
  column;
* a subspace basis is an orthonormal (m, r) array;
* the coherence profile of a matrix with unit columns is
  p(i) = sum_{k != i} |x_i' x_k|^p for p in {1, 2}; note the sum of
  p-th powers is used directly, no root is taken.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import DataError, NumericalError
from .rng import stream

__all__ = [
    "CoherenceProfile",
    "Normalized",
    "TopSubspace",
    "normalize_columns",
    "coherence",
    "coherence_gram",
    "orthonormal_basis",
    "top_r_singular_subspace",
    "random_projection",
    "deflate",
    "recovery_error",
]

ZERO_COLUMN_TOL = 1e-14
UNIT_COLUMN_TOL = 1e-8
RANK_REL_TOL = 1e-10
SIGMA_GAP_TOL = 1e-12


@dataclass(frozen=True)
class CoherenceProfile:
    """Per-column coherence values together with the power that made them."""

    values: np.ndarray
    p: int

    def __post_init__(self):
        if self.p not in (1, 2):
            raise DataError(f"power p must be 1 or 2, got {self.p}")


class Normalized(NamedTuple):
    x: np.ndarray
    kept: np.ndarray


class TopSubspace(NamedTuple):
    basis: np.ndarray
    unique: bool


def _as_matrix(d, name="matrix"):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] < 1 or d.shape[1] < 1:
        raise DataError(f"{name} must be 2-d and non-empty, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise DataError(f"{name} contains NaN or Inf entries")
    return d


def normalize_columns(d, strict=True):
    """Scale every column to the unit sphere.

    Returns ``Normalized(x, kept)`` where ``kept`` maps columns of ``x``
    back to columns of ``d``.  A column with norm below 1e-14 is an error
    in strict mode; in lenient mode it is dropped and absent from
    ``kept``.
    """
    d = _as_matrix(d)
    norms = np.linalg.norm(d, axis=0)
    alive = norms > ZERO_COLUMN_TOL
    if strict and not np.all(alive):
        bad = int(np.flatnonzero(~alive)[0])
        raise DataError(f"column {bad} has norm {norms[bad]:.3e}, below 1e-14")
    if not np.any(alive):
        raise DataError("all columns have norm below 1e-14")
    kept = np.flatnonzero(alive)
    x = d[:, kept] / norms[kept]
    return Normalized(x, kept)


def coherence(x, p=2, block=kernels.DEFAULT_BLOCK, backend=None):
    """Coherence profile of a matrix with unit columns.

    ``x`` must already have unit columns (within 1e-8); use
    ``normalize_columns`` first.  The Gram matrix is never materialized:
    the kernel walks it in column blocks of width ``block``, so peak
    extra memory is O(n * block).  The diagonal self term is excluded by
    subtraction, and tiny negative results of that subtraction are
    clamped to zero.
    """
    x = _as_matrix(x)
    norms = np.linalg.norm(x, axis=0)
    if np.any(np.abs(norms - 1.0) > UNIT_COLUMN_TOL):
        bad = int(np.argmax(np.abs(norms - 1.0)))
        raise DataError(
            f"column {bad} has norm {norms[bad]:.12f}; coherence requires unit columns"
        )
    sums = kernels.block_power_sums(x, p, block=block, backend=backend)
    return CoherenceProfile(np.maximum(sums - 1.0, 0.0), p)


def coherence_gram(d, p=2):
    """Coherence profile straight from the full Gram matrix.

    Reference implementation: forms G = D'D, zeroes the diagonal, sums
    |G|^p down each column.  Columns need not be normalized, which is
    what the recovery-condition validators require; memory is O(n^2), so
    keep it to moderate n.
    """
    d = _as_matrix(d)
    if p not in (1, 2):
        raise DataError(f"power p must be 1 or 2, got {p}")
    g = d.T @ d
    np.fill_diagonal(g, 0.0)
    vals = np.abs(g).sum(axis=0) if p == 1 else (g * g).sum(axis=0)
    return CoherenceProfile(vals, p)


def orthonormal_basis(y, tol=RANK_REL_TOL):
    """Orthonormal basis for the column span of ``y`` at numerical rank.

    Singular directions with sigma_i <= tol * sigma_1 are discarded.
    """
    y = _as_matrix(y)
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    if s[0] <= ZERO_COLUMN_TOL:
        raise NumericalError("matrix is numerically zero, no basis exists")
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


def top_r_singular_subspace(y, r):
    """Span of the top r left singular vectors of ``y``.

    Returns ``TopSubspace(basis, unique)``; ``unique`` is False when
    sigma_r and sigma_{r+1} coincide within 1e-12, meaning the subspace
    is not determined by ``y`` alone.
    """
    y = _as_matrix(y)
    r = int(r)
    if r < 1 or r > min(y.shape):
        raise DataError(f"r={r} out of range for shape {y.shape}")
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    unique = r == len(s) or bool(s[r - 1] - s[r] > SIGMA_GAP_TOL)
    return TopSubspace(u[:, :r], unique)


def random_projection(x, d, seed, phi=None):
    """Project columns of ``x`` into d dimensions by a Gaussian sketch.

    The sketch matrix has i.i.d. N(0, 1/d) entries drawn from the Philox
    stream for ``seed``; pass ``phi`` to substitute a specific sketch
    (tests use the identity).
    """
    x = _as_matrix(x)
    m = x.shape[0]
    if not 1 <= d <= m:
        raise DataError(f"projection dimension d={d} must satisfy 1 <= d <= m={m}")
    if phi is None:
        phi = stream(seed).standard_normal((d, m)) / np.sqrt(d)
    else:
        phi = _as_matrix(phi, "phi")
        if phi.shape != (d, m):
            raise DataError(f"phi must have shape {(d, m)}, got {phi.shape}")
    return phi @ x


def deflate(x, basis):
    """Remove from every column its component inside span(basis)."""
    x = _as_matrix(x)
    basis = _as_matrix(basis, "basis")
    if basis.shape[0] != x.shape[0]:
        raise DataError(
            f"basis rows {basis.shape[0]} do not match data rows {x.shape[0]}"
        )
    return x - basis @ (basis.T @ x)


def _require_orthonormal(u, name):
    u = _as_matrix(u, name)
    gram = u.T @ u
    if not np.allclose(gram, np.eye(u.shape[1]), atol=1e-8):
        raise DataError(f"{name} does not have orthonormal columns")
    return u


def recovery_error(u_true, u_hat):
    """Relative residual of the true basis under the recovered projector.

    ||U - P U||_F / ||U||_F with P the orthogonal projector onto the
    recovered subspace.  Zero iff span(u_true) is contained in
    span(u_hat); both inputs must be orthonormal.
    """
    u_true = _require_orthonormal(u_true, "u_true")
    u_hat = _require_orthonormal(u_hat, "u_hat")
    if u_true.shape[0] != u_hat.shape[0]:
        raise DataError("bases live in different ambient dimensions")
    resid = u_true - u_hat @ (u_hat.T @ u_true)
    return float(np.linalg.norm(resid) / np.linalg.norm(u_true))
