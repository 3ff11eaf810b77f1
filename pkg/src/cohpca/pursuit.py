"""Outlier-robust subspace recovery by coherence ranking.

The pipeline is: normalize columns to the unit sphere, score every
column by its summed coherence with all other columns, then keep a
small set of high-coherence columns and take their span as the
recovered subspace.  Outliers score low because they correlate with
nothing; inliers score high because they correlate with each other.

Four column-selection strategies are provided:

* GreedyRank     -- walk columns by decreasing coherence, keep one only
                    if it adds a new direction, stop at r;
* TopFraction    -- keep the top (1-q) fraction, span by truncated SVD;
* FixedCount     -- keep a fixed number of columns, span by truncated
                    SVD;
* Adaptive       -- work in a random low-dimensional sketch, repeatedly
                    take the highest-coherence column that survives a
                    residual-norm threshold and deflate it away.

GreedyRank and Adaptive pick exactly r independent columns, so their
span is the basis directly.  TopFraction and FixedCount keep more
columns than r and truncate by SVD, which is also what the noisy /
multi-pass variants need.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, NumericalError
from .kernels import DEFAULT_BLOCK
from .linalg import (
    CoherenceProfile,
    coherence,
    normalize_columns,
    orthonormal_basis,
    random_projection,
    top_r_singular_subspace,
)

__all__ = [
    "GreedyRank",
    "TopFraction",
    "FixedCount",
    "Adaptive",
    "CopConfig",
    "CopResult",
    "cop",
    "cop_multipass",
    "spca",
    "greedy_rank_sampling",
    "top_fraction_sampling",
    "adaptive_sampling",
    "residual_outliers",
]


@dataclass(frozen=True)
class GreedyRank:
    rank_tol: float = 1e-10


@dataclass(frozen=True)
class TopFraction:
    q: float = 0.5


@dataclass(frozen=True)
class FixedCount:
    count: int = 20


@dataclass(frozen=True)
class Adaptive:
    """Sketch-and-deflate selection.

    ``k`` controls the sketch dimension k*r.  ``upsilon`` is the
    residual-norm floor below which a column is considered used up;
    None picks 0.2 times the median sketched column norm, a sensible
    default for noisy data (keep the explicit 0.0 for clean data).
    """

    k: int = 2
    upsilon: float | None = 0.0


@dataclass(frozen=True)
class CopConfig:
    """Everything cop() needs besides the data.

    ``seed`` feeds the sketch of the Adaptive strategy; the other
    strategies are deterministic.  ``backend`` overrides the coherence
    kernel choice ("numba"/"numpy", default: COHPCA_BACKEND or auto).
    """

    r: int
    p: int = 2
    strategy: object = GreedyRank()
    block: int = DEFAULT_BLOCK
    seed: int = 0
    backend: str | None = None


@dataclass(frozen=True)
class CopResult:
    """basis: recovered orthonormal basis, exactly r columns.
    sampled: indices (into the input matrix) of the columns whose span
    was used.  profile: coherence values of the surviving columns.
    dropped: indices of columns discarded as numerically zero.
    unique: False when an SVD truncation hit a tied singular value, so
    the subspace was not determined by the sampled columns alone."""

    basis: np.ndarray
    sampled: np.ndarray
    profile: CoherenceProfile
    dropped: np.ndarray
    unique: bool = True


def greedy_rank_sampling(x, profile, r, rank_tol=1e-10):
    """Indices of the first r columns, by decreasing coherence, that are
    pairwise linearly independent.

    A candidate is kept only if its residual after projection onto the
    span of the already-kept columns exceeds ``rank_tol`` times its
    norm.  Ties in coherence break toward the lower index.  Raises when
    the candidates are exhausted before r picks.
    """
    values = np.asarray(profile.values, dtype=np.float64)
    n = x.shape[1]
    if values.shape != (n,):
        raise DataError(f"profile length {values.shape} does not match {n} columns")
    if not 1 <= r <= x.shape[0]:
        raise DataError(f"r={r} must satisfy 1 <= r <= m={x.shape[0]}")
    order = np.argsort(-values, kind="stable")
    picked = []
    q = np.empty((x.shape[0], r))
    for idx in order:
        col = x[:, idx]
        resid = col - q[:, : len(picked)] @ (q[:, : len(picked)].T @ col)
        norm = np.linalg.norm(resid)
        if norm > rank_tol * np.linalg.norm(col):
            q[:, len(picked)] = resid / norm
            picked.append(int(idx))
            if len(picked) == r:
                return np.array(picked)
    raise NumericalError(
        f"only {len(picked)} linearly independent columns found, need r={r}"
    )


def top_fraction_sampling(profile, q):
    """Indices of the ceil((1-q)*n) columns with largest coherence.

    Ties break toward the lower index; the result is ordered by
    decreasing coherence.
    """
    if not 0.0 < q < 1.0:
        raise DataError(f"fraction q={q} must lie strictly between 0 and 1")
    values = np.asarray(profile.values)
    keep = int(np.ceil((1.0 - q) * len(values)))
    return np.argsort(-values, kind="stable")[:keep]


def _fixed_count_sampling(profile, count):
    if count < 1:
        raise DataError(f"column count {count} must be >= 1")
    values = np.asarray(profile.values)
    return np.argsort(-values, kind="stable")[: min(count, len(values))]


def adaptive_sampling(x, profile, r, k=2, upsilon=0.0, seed=0, phi=None):
    """Sketch-and-deflate selection of r independent columns.

    The data is sketched to k*r dimensions (Gaussian, seeded; pass
    ``phi`` to pin the sketch, e.g. the identity in tests).  Then r
    times: columns whose current sketched norm is at most ``upsilon``
    are retired, the highest-coherence live column is picked (ties to
    the lower index), and its direction is deflated out of the sketch.
    ``upsilon=None`` uses 0.2 times the median initial sketched norm.
    Raises when every column is retired before r picks.
    """
    if k < 1:
        raise DataError(f"sketch factor k={k} must be >= 1")
    values = np.array(profile.values, dtype=np.float64, copy=True)
    n = x.shape[1]
    if values.shape != (n,):
        raise DataError(f"profile length {values.shape} does not match {n} columns")
    sketch = random_projection(x, k * r, seed, phi=phi)
    norms0 = np.linalg.norm(sketch, axis=0)
    if upsilon is None:
        upsilon = 0.2 * float(np.median(norms0))
    if upsilon < 0:
        raise DataError(f"threshold upsilon={upsilon} must be >= 0")
    picked = []
    for _ in range(r):
        norms = np.linalg.norm(sketch, axis=0)
        values[norms <= upsilon] = 0.0
        if not np.any(values > 0.0):
            raise NumericalError(
                f"candidate pool exhausted after {len(picked)} of {r} picks"
            )
        j = int(np.argmax(values))
        values[j] = 0.0
        picked.append(j)
        f = sketch[:, j].copy()
        norm = np.linalg.norm(f)
        if norm <= 0.0:
            raise NumericalError(f"picked column {j} vanished in the sketch")
        f /= norm
        sketch = sketch - np.outer(f, f @ sketch)
    return np.array(picked)


def _sample(x, prof, cfg):
    s = cfg.strategy
    if isinstance(s, GreedyRank):
        return greedy_rank_sampling(x, prof, cfg.r, s.rank_tol), "exact"
    if isinstance(s, TopFraction):
        return top_fraction_sampling(prof, s.q), "svd"
    if isinstance(s, FixedCount):
        return _fixed_count_sampling(prof, s.count), "svd"
    if isinstance(s, Adaptive):
        return adaptive_sampling(x, prof, cfg.r, s.k, s.upsilon, cfg.seed), "exact"
    raise DataError(f"unknown sampling strategy {s!r}")


def _finish_exact(x, picked, r):
    basis = orthonormal_basis(x[:, picked])
    if basis.shape[1] != r:
        raise NumericalError(
            f"sampled columns span {basis.shape[1]} dimensions, need r={r}"
        )
    return basis, True


def _finish_svd(x, picked, r):
    y = x[:, picked]
    if min(y.shape) < r:
        raise NumericalError(f"sampled set of {y.shape[1]} columns cannot span r={r}")
    top = top_r_singular_subspace(y, r)
    return top.basis, top.unique


def cop(d, cfg):
    """Recover an r-dimensional subspace from outlier-ridden columns.

    Normalizes columns (dropping numerically zero ones), computes the
    coherence profile with the blocked kernel, selects columns per
    ``cfg.strategy``, and returns the span of the selection.  Indices in
    the result refer to columns of ``d`` as given.
    """
    if cfg.r < 1:
        raise DataError(f"target rank r={cfg.r} must be >= 1")
    x, kept = normalize_columns(d, strict=False)
    n_all = np.asarray(d).shape[1]
    dropped = np.setdiff1d(np.arange(n_all), kept)
    if x.shape[1] < cfg.r:
        raise NumericalError(
            f"only {x.shape[1]} usable columns for target rank r={cfg.r}"
        )
    prof = coherence(x, cfg.p, block=cfg.block, backend=cfg.backend)
    picked, finish = _sample(x, prof, cfg)
    if finish == "exact":
        basis, unique = _finish_exact(x, picked, cfg.r)
    else:
        basis, unique = _finish_svd(x, picked, cfg.r)
    return CopResult(basis, kept[picked], prof, dropped, unique)


def cop_multipass(d, cfg, h):
    """Multi-round variant for noisy data.

    Runs the Adaptive selection h times; after each round the picked
    columns leave the candidate pool, and the union of all picks is
    truncated to its top-r singular subspace.  The coherence profile is
    computed once up front.  Requires an Adaptive strategy and h*r
    available columns.
    """
    if not isinstance(cfg.strategy, Adaptive):
        raise DataError("cop_multipass requires an Adaptive strategy")
    if h < 1:
        raise DataError(f"pass count h={h} must be >= 1")
    if cfg.r < 1:
        raise DataError(f"target rank r={cfg.r} must be >= 1")
    x, kept = normalize_columns(d, strict=False)
    n_all = np.asarray(d).shape[1]
    dropped = np.setdiff1d(np.arange(n_all), kept)
    if x.shape[1] < h * cfg.r:
        raise NumericalError(
            f"{x.shape[1]} usable columns cannot supply h*r = {h * cfg.r} picks"
        )
    prof = coherence(x, cfg.p, block=cfg.block, backend=cfg.backend)
    pool = np.arange(x.shape[1])
    picked_all = []
    s = cfg.strategy
    for round_idx in range(h):
        sub_prof = CoherenceProfile(prof.values[pool], prof.p)
        local = adaptive_sampling(
            x[:, pool], sub_prof, cfg.r, s.k, s.upsilon, seed=(cfg.seed, round_idx)
        )
        picked_all.extend(pool[local])
        pool = np.setdiff1d(pool, pool[local])
    picked_all = np.array(picked_all)
    basis, unique = _finish_svd(x, picked_all, cfg.r)
    return CopResult(basis, kept[picked_all], prof, dropped, unique)


def spca(d, r):
    """Plain spherical PCA baseline: normalize columns, truncated SVD.

    Same normalization path as cop(), no outlier handling at all.
    """
    x, _ = normalize_columns(d, strict=False)
    if min(x.shape) < r:
        raise NumericalError(f"cannot extract r={r} directions from shape {x.shape}")
    return top_r_singular_subspace(x, r).basis


def residual_outliers(d, basis, threshold=0.2):
    """Flag columns far from a subspace: relative residual > threshold.

    Returns an int array with 0 for inliers and 1 for outliers (the
    labeling convention of the data models).  Columns of numerically
    zero norm count as outliers.
    """
    d = np.asarray(d, dtype=np.float64)
    if not 0.0 <= threshold:
        raise DataError(f"threshold {threshold} must be >= 0")
    norms = np.linalg.norm(d, axis=0)
    resid = np.linalg.norm(d - basis @ (basis.T @ d), axis=0)
    out = np.ones(d.shape[1], dtype=np.int64)
    alive = norms > 1e-14
    out[alive] = (resid[alive] / norms[alive] > threshold).astype(np.int64)
    return out


def with_strategy(cfg, strategy):
    """Convenience: copy of ``cfg`` with a different sampling strategy."""
    return replace(cfg, strategy=strategy)
