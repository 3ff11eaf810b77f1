"""Desk-scale experiments: phase transitions, sweeps, timing, saliency.

Every runner is a pure function of its parameters; randomness flows
from one base seed into per-cell, per-trial sub-streams, so a run is
reproducible column for column and any single trial can be replayed.
Runners optionally write CSV files (first line is a "# cohpca <name> v1"
schema comment, then a header row) and, where it makes sense, PGM
heatmaps.
"""

import csv
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DataError, NumericalError
from .linalg import coherence, normalize_columns, orthonormal_basis, recovery_error
from .models import (
    INLIER,
    OUTLIER,
    gen_noisy,
    gen_structured_outliers,
    gen_union,
    gen_unstructured,
    sigma_for_tau,
)
from .clustering import correct_clustering
from .pursuit import (
    CopConfig,
    FixedCount,
    GreedyRank,
    TopFraction,
    cop,
    greedy_rank_sampling,
    spca,
)
from .rng import stream

__all__ = [
    "PhaseResult",
    "run_phase_transition",
    "run_noise_sweep",
    "run_structured_sweep",
    "run_cluster_correction",
    "SaliencyResult",
    "saliency",
    "run_bench",
    "write_rows_csv",
]


def write_rows_csv(path, tag, header, rows):
    """Write dict rows to CSV with a schema comment line on top."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# cohpca {tag} v1\n")
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


@dataclass(frozen=True)
class PhaseResult:
    """fractions[i, j] is the success rate at n1 = n1_over_r[i] * r,
    n2 = n2_over_m[j] * m."""

    fractions: np.ndarray
    n1_over_r: tuple
    n2_over_m: tuple
    m: int
    r: int
    trials: int
    count: int
    p: int
    success_tol: float


def run_phase_transition(
    m=100,
    r=10,
    n1_over_r=tuple(range(1, 11)),
    n2_over_m=(0, 5, 10, 20, 30),
    trials=10,
    count=20,
    p=2,
    seed=0,
    success_tol=1e-5,
    csv_path=None,
    pgm_path=None,
):
    """Exact-recovery success rates over a grid of inlier/outlier ratios.

    Each cell draws ``trials`` unstructured datasets, keeps the
    ``count`` highest-coherence columns, truncates their span to rank r
    and scores success when the recovery error is at most
    ``success_tol``.  The optional PGM heatmap has one row per
    n1_over_r value (in the given order), one column per n2_over_m
    value, and pixel round(255 * fraction), so 255 means every trial
    succeeded.
    """
    n1_over_r = tuple(n1_over_r)
    n2_over_m = tuple(n2_over_m)
    if trials < 1:
        raise DataError(f"trials={trials} must be >= 1")
    cfg = CopConfig(r=r, p=p, strategy=FixedCount(count))
    fractions = np.zeros((len(n1_over_r), len(n2_over_m)))
    rows = []
    for i, a in enumerate(n1_over_r):
        for j, b in enumerate(n2_over_m):
            n1 = int(round(a * r))
            n2 = int(round(b * m))
            wins = 0
            for t in range(trials):
                ds = gen_unstructured(m, r, n1, n2, seed=(seed, i, j, t))
                try:
                    res = cop(ds.d, cfg)
                except NumericalError as exc:
                    raise NumericalError(
                        f"phase cell n1/r={a} n2/m={b} trial={t}: {exc}"
                    ) from exc
                wins += recovery_error(ds.basis, res.basis) <= success_tol
            fractions[i, j] = wins / trials
            rows.append(
                {
                    "n1_over_r": a,
                    "n2_over_m": b,
                    "n1": n1,
                    "n2": n2,
                    "trials": trials,
                    "successes": wins,
                    "fraction": fractions[i, j],
                }
            )
    if csv_path:
        write_rows_csv(csv_path, "phase", list(rows[0]), rows)
    if pgm_path:
        from .io import write_pgm

        write_pgm(pgm_path, np.rint(255 * fractions))
    return PhaseResult(
        fractions, n1_over_r, n2_over_m, m, r, trials, count, p, success_tol
    )


def run_noise_sweep(
    taus,
    m=400,
    r=5,
    n1=50,
    n2=500,
    p=2,
    seeds=20,
    seed=0,
    csv_path=None,
):
    """Inlier/outlier coherence separation as noise grows.

    ``taus`` are noise-to-signal norm ratios (0 means clean data); each
    is converted to the matching amplitude sigma.  For every (tau, seed)
    the row records the smallest inlier and largest outlier coherence of
    the normalized data and their gap; a positive gap means coherence
    ranking still separates the classes perfectly.
    """
    if n2 < 1:
        raise DataError("the sweep needs at least one outlier column")
    if seeds < 1:
        raise DataError(f"seeds={seeds} must be >= 1")
    rows = []
    for ti, tau in enumerate(taus):
        sigma = sigma_for_tau(tau)
        for s in range(seeds):
            ds = gen_noisy(m, r, n1, n2, sigma, seed=(seed, ti, s))
            x, kept = normalize_columns(ds.d, strict=False)
            prof = coherence(x, p).values
            labels = ds.labels[kept]
            min_inlier = float(prof[labels == INLIER].min())
            max_outlier = float(prof[labels == OUTLIER].max())
            vmax = float(prof.max())
            gap = min_inlier - max_outlier
            rows.append(
                {
                    "tau": tau,
                    "sigma": sigma,
                    "seed": s,
                    "p": p,
                    "min_inlier": min_inlier,
                    "max_outlier": max_outlier,
                    "gap": gap,
                    "gap_over_max": gap / vmax if vmax > 0 else 0.0,
                }
            )
    if csv_path:
        write_rows_csv(csv_path, "noise-sweep", list(rows[0]), rows)
    return rows


def run_structured_sweep(
    mus,
    m=200,
    r=5,
    n1=400,
    n2=20,
    nu=0.2,
    p=2,
    seeds=20,
    seed=0,
    csv_path=None,
):
    """Recovery error against clustered outliers of varying tightness.

    Inliers are clustered (mixing ``nu``), outliers are clustered around
    a common direction with mixing ``mu``; small mu makes the outliers
    nearly parallel and is the regime that defeats naive detectors.
    Every row also carries the plain spherical-PCA error on the same
    data as the baseline.
    """
    if seeds < 1:
        raise DataError(f"seeds={seeds} must be >= 1")
    cfg = CopConfig(r=r, p=p, strategy=GreedyRank())
    rows = []
    for mi, mu in enumerate(mus):
        for s in range(seeds):
            ds = gen_structured_outliers(
                m, r, n1, n2, mu, seed=(seed, mi, s), inlier_nu=nu
            )
            try:
                res = cop(ds.d, cfg)
            except NumericalError as exc:
                raise NumericalError(f"structured sweep mu={mu} seed={s}: {exc}") from exc
            err = recovery_error(ds.basis, res.basis)
            err_spca = recovery_error(ds.basis, spca(ds.d, r))
            rows.append({"mu": mu, "seed": s, "error": err, "error_spca": err_spca})
    if csv_path:
        write_rows_csv(csv_path, "structured-sweep", list(rows[0]), rows)
    return rows


def run_cluster_correction(
    m=50,
    dims=(3, 3),
    sizes=(250, 250),
    corruption=0.2,
    iterations=4,
    q=0.5,
    seeds=20,
    seed=0,
    csv_path=None,
):
    """Clustering-error trajectories while correcting corrupted labels.

    Draws union-of-subspaces data, flips a ``corruption`` fraction of
    the true labels to uniformly random wrong clusters, then runs the
    correction loop.  Rows carry (seed, iteration, error); iteration 0
    is the corrupted starting point, whose error equals ``corruption``
    by construction (up to rounding to whole columns).
    """
    dims = tuple(dims)
    if len(set(dims)) != 1:
        raise DataError("the correction loop fits one common rank; dims must be equal")
    if not 0.0 <= corruption < 1.0:
        raise DataError(f"corruption={corruption} must lie in [0, 1)")
    r = dims[0]
    n = int(sum(sizes))
    n_clusters = len(dims)
    cfg = CopConfig(r=r, strategy=TopFraction(q))
    rows = []
    for s in range(seeds):
        ds = gen_union(m, dims, sizes, seed=(seed, s))
        rng = stream(seed, s, 1)
        flip = rng.choice(n, int(round(corruption * n)), replace=False)
        labels = ds.labels.copy()
        if n_clusters > 1:
            offsets = rng.integers(1, n_clusters, size=len(flip))
            labels[flip] = (labels[flip] + offsets) % n_clusters
        try:
            result = correct_clustering(
                ds.d, labels, r, iterations, cfg=cfg, truth=ds.labels
            )
        except NumericalError as exc:
            raise NumericalError(f"cluster correction seed={s}: {exc}") from exc
        for it, err in enumerate(result.trajectory):
            rows.append({"seed": s, "iteration": it, "error": err})
        # a run that converged early holds its final error for the
        # remaining iterations so every seed reports the full range
        last = result.trajectory[-1]
        for it in range(len(result.trajectory), iterations + 1):
            rows.append({"seed": s, "iteration": it, "error": last})
    if csv_path:
        write_rows_csv(csv_path, "cluster-correct", list(rows[0]), rows)
    return rows


@dataclass(frozen=True)
class SaliencyResult:
    """values: per-patch saliency in [0, 1] (1 = most outlying).
    image: the same map quantized to 0..255 and upsampled to the
    (possibly cropped) input size.  cropped: True when the input was
    trimmed to a multiple of the patch size.  basis: background
    subspace spanned by the most mutually coherent patches, or None
    when the image is too degenerate to carry one."""

    values: np.ndarray
    image: np.ndarray
    cropped: bool
    basis: np.ndarray | None


def saliency(image, patch=10, r=2, q=0.5, p=2):
    """Patch saliency by inverted coherence.

    The image is cut into non-overlapping ``patch`` x ``patch`` tiles
    (cropped from the top-left if the dimensions do not divide), tiles
    become columns, and each tile's coherence with all others is
    computed; background tiles resemble many others and score high.
    Saliency is 1 - coherence/max(coherence), so the most repetitive
    tile gets 0 and unusual tiles approach 1.  All-zero tiles are
    maximally salient by convention.
    """
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2:
        raise DataError(f"image must be 2-d, got shape {img.shape}")
    if patch < 1:
        raise DataError(f"patch={patch} must be >= 1")
    gh, gw = img.shape[0] // patch, img.shape[1] // patch
    if gh < 1 or gw < 1:
        raise DataError(f"image {img.shape} is smaller than one {patch}x{patch} patch")
    cropped = img.shape != (gh * patch, gw * patch)
    img = img[: gh * patch, : gw * patch]
    tiles = (
        img.reshape(gh, patch, gw, patch)
        .transpose(0, 2, 1, 3)
        .reshape(gh * gw, patch * patch)
        .T
    )
    x, kept = normalize_columns(tiles, strict=False)
    prof = coherence(x, p)
    values = np.zeros(gh * gw)
    values[kept] = prof.values
    vmax = values.max()
    sal = 1.0 - values / vmax if vmax > 0 else np.zeros_like(values)
    grid = sal.reshape(gh, gw)
    upsampled = np.kron(grid, np.ones((patch, patch)))
    out = np.rint(255 * upsampled).astype(np.uint8)
    try:
        basis = cop(tiles, CopConfig(r=r, p=p, strategy=TopFraction(q))).basis
    except NumericalError:
        basis = None
    return SaliencyResult(grid, out, cropped, basis)


def _bench_pipeline(d, r, p, block, backend):
    timings = {}
    t0 = time.perf_counter()
    x, _ = normalize_columns(d, strict=False)
    timings["normalize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    prof = coherence(x, p, block=block, backend=backend)
    timings["coherence"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    picked = greedy_rank_sampling(x, prof, r)
    timings["sampling"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    orthonormal_basis(x[:, picked])
    timings["basis"] = time.perf_counter() - t0
    return timings


def run_bench(
    cases=((1000, 1000), (2000, 2000)),
    r=10,
    p=2,
    block=kernels.DEFAULT_BLOCK,
    runs=1,
    seed=0,
    backends=None,
    csv_path=None,
):
    """Stage timings of the full pipeline on unstructured data.

    ``cases`` lists (m, n) sizes; each gets n1 = n/5 inliers and the
    rest outliers.  Every available kernel backend runs the identical
    pipeline on identical data, one row per (case, run, backend, stage),
    seconds in the last column.  All non-timing columns are
    deterministic for a fixed seed.
    """
    if backends is None:
        backends = ("numba", "numpy") if kernels.HAS_NUMBA else ("numpy",)
    if runs < 1:
        raise DataError(f"runs={runs} must be >= 1")
    if any(bk == "numba" for bk in backends):
        # trigger jit compilation outside the timed region
        warm = gen_unstructured(8, 2, 4, 4, seed=(seed, 999)).d
        x, _ = normalize_columns(warm)
        coherence(x, p, backend="numba")
        coherence(x, 1, backend="numba")
    rows = []
    for ci, (m, n) in enumerate(cases):
        n1 = n // 5
        n2 = n - n1
        r_eff = min(r, n1)
        for run in range(runs):
            ds = gen_unstructured(m, r_eff, n1, n2, seed=(seed, ci, run))
            for backend in backends:
                timings = _bench_pipeline(ds.d, r_eff, p, block, backend)
                for stage, seconds in timings.items():
                    rows.append(
                        {
                            "m": m,
                            "n": n,
                            "n1": n1,
                            "n2": n2,
                            "r": r_eff,
                            "p": p,
                            "block": block,
                            "run": run,
                            "backend": backend,
                            "stage": stage,
                            "seconds": seconds,
                        }
                    )
    if csv_path:
        write_rows_csv(csv_path, "bench", list(rows[0]), rows)
    return rows
