"""Command line front end.

Exit codes: 0 on success, 1 for bad input (unreadable files, malformed
values, unusable parameter combinations), 2 when the data defeats the
numerics (rank collapse, exhausted candidate pools); the failing case is
named on stderr.

Every subcommand accepts ``--config FILE`` holding ``key=value`` lines
(keys are the long option names with dashes or underscores, '#' starts a
comment).  Values from the file replace built-in defaults; options given
on the command line win over the file.
"""

import argparse
import sys

import numpy as np

from . import guarantees, io, models
from .errors import DataError, NumericalError
from .experiments import (
    run_bench,
    run_cluster_correction,
    run_noise_sweep,
    run_phase_transition,
    run_structured_sweep,
    saliency,
)
from .pursuit import (
    Adaptive,
    CopConfig,
    FixedCount,
    GreedyRank,
    TopFraction,
    cop,
    cop_multipass,
)

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    # usage errors are bad input, same exit code as DataError
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _ints(text):
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise DataError(f"expected comma separated integers, got {text!r}")


def _floats(text):
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise DataError(f"expected comma separated numbers, got {text!r}")


def _cases(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        parts = tok.split("x")
        if len(parts) != 2:
            raise DataError(f"expected MxN case syntax, got {tok!r}")
        out.append((int(parts[0]), int(parts[1])))
    if not out:
        raise DataError(f"no cases in {text!r}")
    return tuple(out)


def _names(text):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _upsilon(text):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise DataError(f"upsilon must be a number or 'auto', got {text!r}")


def _build_strategy(ns):
    if ns.strategy == "greedy":
        return GreedyRank(rank_tol=ns.rank_tol)
    if ns.strategy == "top-fraction":
        return TopFraction(q=ns.q)
    if ns.strategy == "fixed-count":
        return FixedCount(count=ns.count)
    if ns.strategy == "adaptive":
        return Adaptive(k=ns.k, upsilon=ns.upsilon)
    raise DataError(f"unknown strategy {ns.strategy!r}")


def cmd_gen(ns):
    seed = ns.seed
    if ns.model == "unstructured":
        ds = models.gen_unstructured(ns.m, ns.r, ns.n1, ns.n2, seed, shuffle=ns.shuffle)
    elif ns.model == "structured":
        if ns.mu is None:
            raise DataError("structured model needs --mu")
        ds = models.gen_structured_outliers(
            ns.m, ns.r, ns.n1, ns.n2, ns.mu, seed,
            inlier_nu=ns.inlier_nu, shuffle=ns.shuffle,
        )
    elif ns.model == "noisy":
        if ns.sigma is None and ns.tau is None:
            raise DataError("noisy model needs --sigma or --tau")
        sigma = ns.sigma if ns.sigma is not None else models.sigma_for_tau(ns.tau)
        ds = models.gen_noisy(ns.m, ns.r, ns.n1, ns.n2, sigma, seed, shuffle=ns.shuffle)
    elif ns.model == "clustered":
        if ns.nu is None:
            raise DataError("clustered model needs --nu")
        ds = models.gen_clustered_inliers(
            ns.m, ns.r, ns.n1, ns.n2, ns.nu, seed, shuffle=ns.shuffle
        )
    elif ns.model == "union":
        if ns.dims is None or ns.sizes is None:
            raise DataError("union model needs --dims and --sizes")
        ds = models.gen_union(ns.m, ns.dims, ns.sizes, seed, shuffle=ns.shuffle)
    else:
        raise DataError(f"unknown model {ns.model!r}")
    io.write_matrix(ns.out, ds.d)
    if ns.labels_out:
        io.write_labels(ns.labels_out, ds.labels)
    if ns.basis_out:
        basis = np.hstack(ds.bases) if ns.model == "union" else ds.basis
        io.write_matrix(ns.basis_out, basis)
    print(f"wrote {ds.d.shape[0]}x{ds.d.shape[1]} matrix to {ns.out}")
    return 0


def cmd_cop(ns):
    d = io.read_matrix(getattr(ns, "in"))
    cfg = CopConfig(
        r=ns.r,
        p=ns.p,
        strategy=_build_strategy(ns),
        block=ns.block,
        seed=ns.seed,
        backend=ns.backend,
    )
    if ns.passes > 1:
        res = cop_multipass(d, cfg, ns.passes)
    else:
        res = cop(d, cfg)
    io.write_matrix(ns.basis_out, res.basis)
    if ns.profile_out:
        io.write_matrix(ns.profile_out, res.profile.values[:, None])
    if ns.indices_out:
        io.write_labels(ns.indices_out, res.sampled)
    flag = "" if res.unique else " (subspace not unique at this rank)"
    print(
        f"kept {d.shape[1] - len(res.dropped)} of {d.shape[1]} columns, "
        f"sampled {len(res.sampled)}, basis rank {res.basis.shape[1]}{flag}"
    )
    return 0


def cmd_phase(ns):
    result = run_phase_transition(
        m=ns.m,
        r=ns.r,
        n1_over_r=ns.n1_over_r,
        n2_over_m=ns.n2_over_m,
        trials=ns.trials,
        count=ns.count,
        p=ns.p,
        seed=ns.seed,
        success_tol=ns.success_tol,
        csv_path=ns.csv,
        pgm_path=ns.pgm,
    )
    print("success fractions (rows n1/r, columns n2/m):")
    header = " ".join(f"{b:>6}" for b in result.n2_over_m)
    print(f"{'n1/r':>6} {header}")
    for a, row in zip(result.n1_over_r, result.fractions):
        cells = " ".join(f"{f:6.2f}" for f in row)
        print(f"{a:>6} {cells}")
    return 0


def cmd_noise_sweep(ns):
    rows = run_noise_sweep(
        ns.taus, m=ns.m, r=ns.r, n1=ns.n1, n2=ns.n2, p=ns.p,
        seeds=ns.seeds, seed=ns.seed, csv_path=ns.csv,
    )
    for tau in ns.taus:
        gaps = [row["gap"] for row in rows if row["tau"] == tau]
        positive = sum(g > 0 for g in gaps)
        print(
            f"tau={tau}: positive gap in {positive}/{len(gaps)} seeds, "
            f"median gap {float(np.median(gaps)):.4f}"
        )
    return 0


def cmd_structured_sweep(ns):
    rows = run_structured_sweep(
        ns.mus, m=ns.m, r=ns.r, n1=ns.n1, n2=ns.n2, nu=ns.nu, p=ns.p,
        seeds=ns.seeds, seed=ns.seed, csv_path=ns.csv,
    )
    for mu in ns.mus:
        errs = [row["error"] for row in rows if row["mu"] == mu]
        base = [row["error_spca"] for row in rows if row["mu"] == mu]
        exact = sum(e <= ns.success_tol for e in errs)
        med = float(np.median(errs))
        log_med = np.log10(med) if med > 0 else -np.inf
        print(
            f"mu={mu}: error <= {ns.success_tol:g} in {exact}/{len(errs)} seeds, "
            f"median error {med:.2e} (log10 {log_med:.1f}), "
            f"spca median {float(np.median(base)):.2e}"
        )
    return 0


def cmd_cluster_correct(ns):
    rows = run_cluster_correction(
        m=ns.m,
        dims=ns.dims,
        sizes=ns.sizes,
        corruption=ns.corruption,
        iterations=ns.iterations,
        q=ns.q,
        seeds=ns.seeds,
        seed=ns.seed,
        csv_path=ns.csv,
    )
    for it in range(ns.iterations + 1):
        errs = [row["error"] for row in rows if row["iteration"] == it]
        print(f"iteration {it}: median error {float(np.median(errs)):.4f}")
    return 0


def cmd_saliency(ns):
    img = io.read_pgm(ns.image)
    result = saliency(img, patch=ns.patch, r=ns.r, q=ns.q, p=ns.p)
    io.write_pgm(ns.out, result.image)
    note = " (input cropped to a multiple of the patch size)" if result.cropped else ""
    print(
        f"wrote {result.image.shape[0]}x{result.image.shape[1]} saliency map "
        f"to {ns.out}{note}"
    )
    return 0


def cmd_bench(ns):
    rows = run_bench(
        cases=ns.cases,
        r=ns.r,
        p=ns.p,
        block=ns.block,
        runs=ns.runs,
        seed=ns.seed,
        backends=ns.backends,
        csv_path=ns.csv,
    )
    for m, n in ns.cases:
        for backend in sorted({row["backend"] for row in rows}):
            picked = [
                row
                for row in rows
                if row["m"] == m and row["n"] == n and row["backend"] == backend
            ]
            total = sum(row["seconds"] for row in picked) / max(
                1, len({row["run"] for row in picked})
            )
            kern = [row["seconds"] for row in picked if row["stage"] == "coherence"]
            print(
                f"{m}x{n} {backend}: pipeline {total:.3f}s/run, "
                f"coherence median {float(np.median(kern)):.3f}s"
            )
    return 0


def cmd_check_condition(ns):
    params = guarantees.ConditionParams(
        m=ns.m, r=ns.r, n1=ns.n1, n2=ns.n2, delta=ns.delta,
        mu=ns.mu, sigma=ns.sigma, nu=ns.nu,
    )
    report = guarantees.check_condition(ns.kind, params)
    lines = report.record_lines()
    if ns.validate_trials:
        hit = guarantees.validate_condition_empirically(
            ns.kind, params, trials=ns.validate_trials, seed=ns.seed
        )
        lines.append(f"empirical={hit:.17g}")
    for line in lines:
        print(line)
    if ns.out:
        with open(ns.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="base seed")
    sub.add_argument("--config", default=None, help="key=value defaults file")


def build_parser():
    parser = _Parser(prog="cohpca", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="command", required=True)
    registry = {}

    sub = subparsers.add_parser("gen", help="generate a synthetic dataset")
    registry["gen"] = sub
    sub.add_argument("--model", required=True,
                     choices=["unstructured", "structured", "noisy", "clustered", "union"])
    sub.add_argument("--m", type=int, default=100, help="ambient dimension")
    sub.add_argument("--r", type=int, default=5, help="subspace dimension")
    sub.add_argument("--n1", type=int, default=50, help="inlier count")
    sub.add_argument("--n2", type=int, default=100, help="outlier count")
    sub.add_argument("--mu", type=float, default=None, help="outlier mixing weight")
    sub.add_argument("--sigma", type=float, default=None, help="noise amplitude")
    sub.add_argument("--tau", type=float, default=None,
                     help="noise-to-signal ratio, alternative to --sigma")
    sub.add_argument("--nu", type=float, default=None, help="inlier mixing weight")
    sub.add_argument("--inlier-nu", type=float, default=None,
                     help="cluster the inliers of the structured model too")
    sub.add_argument("--dims", type=_ints, default=None, help="union ranks, e.g. 3,3")
    sub.add_argument("--sizes", type=_ints, default=None, help="union cluster sizes")
    sub.add_argument("--shuffle", action="store_true", help="shuffle column order")
    sub.add_argument("--out", required=True, help="output matrix file")
    sub.add_argument("--labels-out", default=None, help="output labels file")
    sub.add_argument("--basis-out", default=None,
                     help="ground truth basis file (union: clusters side by side)")
    sub.set_defaults(func=cmd_gen)
    _add_common(sub)

    sub = subparsers.add_parser("cop", help="recover a subspace from a matrix file")
    registry["cop"] = sub
    sub.add_argument("--in", required=True, help="input matrix file")
    sub.add_argument("--r", type=int, required=True, help="target rank")
    sub.add_argument("--p", type=int, default=2, choices=[1, 2],
                     help="coherence power")
    sub.add_argument("--strategy", default="greedy",
                     choices=["greedy", "top-fraction", "fixed-count", "adaptive"])
    sub.add_argument("--q", type=float, default=0.5,
                     help="discard fraction for top-fraction")
    sub.add_argument("--count", type=int, default=20,
                     help="columns kept by fixed-count")
    sub.add_argument("--k", type=int, default=2,
                     help="sketch dimension factor for adaptive")
    sub.add_argument("--upsilon", type=_upsilon, default="0",
                     help="adaptive retirement threshold, number or 'auto'")
    sub.add_argument("--rank-tol", type=float, default=1e-10,
                     help="residual tolerance for greedy")
    sub.add_argument("--passes", type=int, default=1,
                     help="adaptive rounds to pool before the final truncation")
    sub.add_argument("--block", type=int, default=256, help="kernel block size")
    sub.add_argument("--backend", default=None, choices=["numba", "numpy"],
                     help="kernel backend override")
    sub.add_argument("--basis-out", required=True, help="recovered basis file")
    sub.add_argument("--profile-out", default=None,
                     help="coherence profile file (kept columns, one per row)")
    sub.add_argument("--indices-out", default=None,
                     help="sampled column indices file")
    sub.set_defaults(func=cmd_cop)
    _add_common(sub)

    sub = subparsers.add_parser("phase", help="success grid over inlier/outlier ratios")
    registry["phase"] = sub
    sub.add_argument("--m", type=int, default=100)
    sub.add_argument("--r", type=int, default=10)
    sub.add_argument("--n1-over-r", type=_ints, default="1,2,3,4,5,6,7,8,9,10")
    sub.add_argument("--n2-over-m", type=_ints, default="0,5,10,20,30")
    sub.add_argument("--trials", type=int, default=10)
    sub.add_argument("--count", type=int, default=20, help="columns kept per trial")
    sub.add_argument("--p", type=int, default=2, choices=[1, 2])
    sub.add_argument("--success-tol", type=float, default=1e-5)
    sub.add_argument("--csv", default=None, help="per-cell CSV output")
    sub.add_argument("--pgm", default=None, help="success heatmap PGM output")
    sub.set_defaults(func=cmd_phase)
    _add_common(sub)

    sub = subparsers.add_parser("noise-sweep", help="coherence gap under noise")
    registry["noise-sweep"] = sub
    sub.add_argument("--taus", type=_floats, default="0,0.5,1")
    sub.add_argument("--m", type=int, default=400)
    sub.add_argument("--r", type=int, default=5)
    sub.add_argument("--n1", type=int, default=50)
    sub.add_argument("--n2", type=int, default=500)
    sub.add_argument("--p", type=int, default=2, choices=[1, 2])
    sub.add_argument("--seeds", type=int, default=20, help="trials per tau")
    sub.add_argument("--csv", default=None)
    sub.set_defaults(func=cmd_noise_sweep)
    _add_common(sub)

    sub = subparsers.add_parser("structured-sweep",
                                help="recovery against clustered outliers")
    registry["structured-sweep"] = sub
    sub.add_argument("--mus", type=_floats, default="5,0.5,0.2,0.1")
    sub.add_argument("--m", type=int, default=200)
    sub.add_argument("--r", type=int, default=5)
    sub.add_argument("--n1", type=int, default=400)
    sub.add_argument("--n2", type=int, default=20)
    sub.add_argument("--nu", type=float, default=0.2, help="inlier cluster mixing")
    sub.add_argument("--p", type=int, default=2, choices=[1, 2])
    sub.add_argument("--seeds", type=int, default=20, help="trials per mu")
    sub.add_argument("--success-tol", type=float, default=1e-5)
    sub.add_argument("--csv", default=None)
    sub.set_defaults(func=cmd_structured_sweep)
    _add_common(sub)

    sub = subparsers.add_parser("cluster-correct",
                                help="fix corrupted subspace clustering labels")
    registry["cluster-correct"] = sub
    sub.add_argument("--m", type=int, default=50)
    sub.add_argument("--dims", type=_ints, default="3,3")
    sub.add_argument("--sizes", type=_ints, default="250,250")
    sub.add_argument("--corruption", type=float, default=0.2)
    sub.add_argument("--iterations", type=int, default=4)
    sub.add_argument("--q", type=float, default=0.5,
                     help="discard fraction of the per-cluster subspace fit")
    sub.add_argument("--seeds", type=int, default=20)
    sub.add_argument("--csv", default=None)
    sub.set_defaults(func=cmd_cluster_correct)
    _add_common(sub)

    sub = subparsers.add_parser("saliency", help="patch saliency map of a PGM image")
    registry["saliency"] = sub
    sub.add_argument("--image", required=True, help="input PGM image")
    sub.add_argument("--patch", type=int, default=10, help="patch edge in pixels")
    sub.add_argument("--r", type=int, default=2, help="background basis rank")
    sub.add_argument("--q", type=float, default=0.5)
    sub.add_argument("--p", type=int, default=2, choices=[1, 2])
    sub.add_argument("--out", required=True, help="output PGM saliency map")
    sub.set_defaults(func=cmd_saliency)
    _add_common(sub)

    sub = subparsers.add_parser("bench", help="time the pipeline stages per backend")
    registry["bench"] = sub
    sub.add_argument("--cases", type=_cases, default="1000x1000,2000x2000",
                     help="comma separated MxN sizes")
    sub.add_argument("--r", type=int, default=10)
    sub.add_argument("--p", type=int, default=2, choices=[1, 2])
    sub.add_argument("--block", type=int, default=256)
    sub.add_argument("--runs", type=int, default=1)
    sub.add_argument("--backends", type=_names, default=None,
                     help="subset of numba,numpy (default: all available)")
    sub.add_argument("--csv", default=None)
    sub.set_defaults(func=cmd_bench)
    _add_common(sub)

    sub = subparsers.add_parser("check-condition",
                                help="evaluate a recovery guarantee condition")
    registry["check-condition"] = sub
    sub.add_argument("--kind", required=True, choices=list(guarantees.KINDS))
    sub.add_argument("--m", type=int, required=True)
    sub.add_argument("--r", type=int, required=True)
    sub.add_argument("--n1", type=int, required=True)
    sub.add_argument("--n2", type=int, required=True)
    sub.add_argument("--delta", type=float, default=0.05,
                     help="failure probability for the high probability kinds")
    sub.add_argument("--mu", type=float, default=None)
    sub.add_argument("--sigma", type=float, default=None)
    sub.add_argument("--nu", type=float, default=None)
    sub.add_argument("--validate-trials", type=int, default=0,
                     help="also sample datasets and report the empirical hit rate")
    sub.add_argument("--out", default=None, help="write the report lines to a file")
    sub.set_defaults(func=cmd_check_condition)
    _add_common(sub)

    return parser, registry


_CONFIG_BOOL = {"true": True, "false": False, "1": True, "0": False,
                "yes": True, "no": False}


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}")
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        pairs[key.strip().replace("-", "_")] = value.strip()
    return pairs


def _convert_config(pairs, sub):
    actions = {act.dest: act for act in sub._actions}
    converted = {}
    for key, value in pairs.items():
        if key in ("config", "func", "command") or key not in actions:
            raise DataError(f"unknown config key {key!r}")
        act = actions[key]
        if isinstance(act.default, bool):
            if value.lower() not in _CONFIG_BOOL:
                raise DataError(f"config key {key!r} expects true/false, got {value!r}")
            converted[key] = _CONFIG_BOOL[value.lower()]
        elif act.type is not None:
            try:
                converted[key] = act.type(value)
            except (TypeError, ValueError) as exc:
                raise DataError(f"config key {key!r}: {exc}")
        else:
            converted[key] = value
        if act.choices is not None and converted[key] not in act.choices:
            raise DataError(
                f"config key {key!r} must be one of {list(act.choices)}, "
                f"got {value!r}"
            )
    return converted


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        parser, registry = build_parser()
        ns = parser.parse_args(argv)
        if ns.config:
            pairs = _load_config(ns.config)
            parser, registry = build_parser()
            registry[ns.command].set_defaults(
                **_convert_config(pairs, registry[ns.command])
            )
            ns = parser.parse_args(argv)
        return ns.func(ns)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except DataError as exc:
        print(f"cohpca: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"cohpca: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cohpca: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
