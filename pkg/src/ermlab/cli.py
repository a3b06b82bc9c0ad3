"""Command-line front end.

Subcommands: fit, select, biasvar, cluster, pca, normalize, split, gen-toy.
Every run prints a JSON report embedding the command echo, the seed, the
library version and a wall-clock field; with a fixed seed, reruns are
byte-identical except for the wall-clock line.

Exit codes: 0 success, 2 bad configuration, 3 data/file error,
4 numeric or singularity error.
"""

import argparse
import csv
import json
import sys
import time

import numpy as np

from . import __version__, _accel, cluster as cluster_mod, dimred, learners, validate
from .data import (
    LabeledDataset,
    ToyModelSpec,
    generate_toy,
    load_csv,
    normalize as normalize_data,
    split as split_data,
)
from .errors import (
    ConvergenceError,
    DegenerateLabelsError,
    DivergenceError,
    DomainError,
    ErmlabError,
    NumericError,
    ParseError,
    SchemaError,
    ShapeError,
    SingularMatrixError,
    SizeError,
)
from .losses import LossKind
from .models import KnnModel
from .optimize import GdConfig
from .validate import train_val_errors

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_DATA_ERRORS = (FileNotFoundError, IsADirectoryError, PermissionError,
                SchemaError, ParseError, SizeError)
_NUMERIC_ERRORS = (SingularMatrixError, DivergenceError, ConvergenceError,
                   NumericError, DegenerateLabelsError)

FIT_ALGOS = ("linreg", "ridge", "logreg", "svm", "bayes", "naive-bayes",
             "tree", "knn")


class ConfigError(Exception):
    pass


def _read_header(path):
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            return [h.strip() for h in next(csv.reader(fh))]
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row")


def _load_dataset(args, need_label=True):
    header = _read_header(args.data)
    if args.features:
        feature_cols = [c.strip() for c in args.features.split(",") if c.strip()]
    else:
        feature_cols = header[:-1] if (need_label and len(header) > 1) else header
    label_col = None
    if need_label:
        label_col = args.label or header[-1]
    return load_csv(args.data, feature_cols, label_col), feature_cols, label_col


def _parse_grid(text):
    """Accept "1:8" (inclusive integer range) or a comma list of numbers."""
    text = text.strip()
    if ":" in text:
        lo, hi = text.split(":")
        return [float(v) for v in range(int(lo), int(hi) + 1)]
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_w_true(text, n):
    if text is None or text == "ones":
        return np.ones(n)
    w = np.array([float(v) for v in text.split(",")], dtype=float)
    if w.size != n:
        raise ConfigError(f"--w-true has {w.size} entries, expected --n {n}")
    return w


def _write_dataset_csv(path, d: LabeledDataset, label_name="label"):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = [f"x{j}" for j in range(d.n)]
        if d.labels is not None:
            header.append(label_name)
        writer.writerow(header)
        for i in range(d.m):
            row = [repr(float(v)) for v in d.features[i]]
            if d.labels is not None:
                row.append(repr(float(d.labels[i])))
            writer.writerow(row)


def _report(args, started, results):
    doc = {
        "command": args.command,
        "argv": args._argv,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "backend": _accel.BACKEND,
        "wall_clock_sec": round(time.time() - started, 6),
        "results": results,
    }
    print(json.dumps(doc, sort_keys=True, indent=2))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _fit_model(args, train):
    """Fit the requested algorithm on the training partition.

    Returns (model, extras) where extras carries iteration counts etc.
    """
    algo = args.algo
    extras = {"iterations": 0, "step_size": 0.0}
    if algo == "linreg":
        return learners.fit_linreg_closed(train), extras
    if algo == "ridge":
        if args.lam is None:
            raise ConfigError("--lambda is required for ridge")
        return learners.fit_ridge_closed(train, learners.RidgeSpec(args.lam)), extras
    if algo == "logreg":
        model, trace = learners.fit_logreg(train, GdConfig(max_iters=args.max_iters))
        extras = {"iterations": trace.iterations_used,
                  "step_size": trace.step_size}
        return model, extras
    if algo == "svm":
        if args.lam is None:
            raise ConfigError("--lambda is required for svm")
        model, trace = learners.fit_svm(
            train, args.lam, GdConfig(step_size="decaying",
                                      max_iters=min(args.max_iters, 5000)))
        extras = {"iterations": trace.iterations_used, "step_size": 0.0}
        return model, extras
    if algo in ("bayes", "naive-bayes"):
        model, _params = learners.fit_bayes(train, naive=(algo == "naive-bayes"))
        return model, extras
    if algo == "tree":
        return learners.grow_tree(train, args.max_depth), extras
    if algo == "knn":
        if args.k is None:
            raise ConfigError("--k is required for knn")
        mode = "majority" if train.label_kind == "binary" else "mean"
        return KnnModel(train, args.k, mode), extras
    raise ConfigError(f"unknown --algo {algo!r}")


def _model_json(model):
    if isinstance(model, KnnModel):
        return json.dumps({
            "kind": "knn",
            "k": model.k,
            "mode": model.mode,
            "train_features": model.train.features.tolist(),
            "train_labels": model.train.labels.tolist(),
        }, sort_keys=True)
    return model.to_json()


def _check_fraction(f):
    if not 0.0 < f < 1.0:
        raise ConfigError(f"--train-fraction must be in (0, 1), got {f}")


def cmd_fit(args):
    started = time.time()
    _check_fraction(args.train_fraction)
    d, feature_cols, label_col = _load_dataset(args)
    sp = split_data(d, args.train_fraction, args.seed)
    model, extras = _fit_model(args, sp.train)
    classification = args.algo in ("logreg", "svm", "bayes", "naive-bayes") or (
        args.algo == "knn" and d.label_kind == "binary")
    loss = LossKind.zero_one() if classification else LossKind.squared()
    train_error, val_error = train_val_errors(model, sp, loss)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(_model_json(model))
    _report(args, started, {
        "algo": args.algo,
        "features": feature_cols,
        "label": label_col,
        "loss": loss.kind,
        "train_error": train_error,
        "val_error": val_error,
        "train_size": sp.train.m,
        "val_size": sp.val.m,
        "model_file": args.out,
        **extras,
    })
    return EXIT_OK


def cmd_select(args):
    started = time.time()
    _check_fraction(args.train_fraction)
    d, _, _ = _load_dataset(args)
    if d.n != 1:
        raise ConfigError("select sweeps polynomial degree on a single feature")
    degrees = [int(v) for v in _parse_grid(args.degrees)]
    if not degrees:
        raise ConfigError("--degrees produced an empty candidate list")

    def make_fit(degree):
        def fit(train):
            from .models import FeatureMapSpec, LinearModel
            from .models import apply_feature_map_many

            phi = apply_feature_map_many(FeatureMapSpec.polynomial(degree),
                                         train.features)
            lifted = LabeledDataset(phi, train.labels, train.label_kind)
            if args.lam is not None:
                core = learners.fit_ridge_closed(lifted, learners.RidgeSpec(args.lam))
            else:
                core = learners.fit_linreg_closed(lifted)
            return LinearModel(core.weights, FeatureMapSpec.polynomial(degree))
        return fit

    candidates = [(f"degree={deg}", make_fit(deg)) for deg in degrees]
    report = validate.select_model(candidates, d, args.train_fraction, args.seed)
    _report(args, started, {
        "candidates": report.to_rows(),
        "chosen_index": report.chosen_index,
        "chosen_label": report.candidates[report.chosen_index].label,
    })
    return EXIT_OK


def _biasvar_rows(args):
    w_true = _parse_w_true(args.w_true, args.n)
    rows = []
    if args.lambda_grid is not None:
        for lam in _parse_grid(args.lambda_grid):
            spec = ToyModelSpec(w_true, args.sigma2, args.m_train, args.seed)
            res = validate.ridge_bias_variance_experiment(spec, lam, args.trials)
            rows.append(res.to_dict())
    else:
        for r in _parse_grid(args.r_grid):
            spec = ToyModelSpec(w_true, args.sigma2, args.m_train, args.seed)
            res = validate.bias_variance_experiment(spec, int(r), args.trials)
            rows.append(res.to_dict())
    return rows


def cmd_biasvar(args):
    started = time.time()
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    rows = _biasvar_rows(args)
    if args.format == "csv":
        cols = list(rows[0].keys())
        lines = [",".join(cols)]
        lines += [",".join(repr(float(row[c])) if isinstance(row[c], float)
                           else str(row[c]) for c in cols) for row in rows]
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, sort_keys=True, indent=2)
    _report(args, started, {"sweep": rows})
    return EXIT_OK


def cmd_cluster(args):
    started = time.time()
    d, _, _ = _load_dataset(args, need_label=False)
    x = d.features
    if args.cluster_algo == "elbow":
        if args.k_max is None:
            raise ConfigError("--k-max is required for elbow")
        pairs = cluster_mod.elbow_sweep(x, args.k_max, restarts=args.restarts,
                                        seed=args.seed)
        if args.format == "csv":
            text = "k,error\n" + "".join(f"{k},{e!r}\n" for k, e in pairs)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        _report(args, started, {"elbow": [{"k": k, "error": e} for k, e in pairs]})
        return EXIT_OK
    if args.k is None:
        raise ConfigError("--k is required for clustering")
    if args.cluster_algo == "kmeans":
        runs = []
        best = None
        best_r = 0
        for r in range(args.restarts):
            result = cluster_mod.kmeans(x, args.k, eps=args.eps,
                                        seed=[args.seed, r])
            runs.append({"restart": r, "error": result.error,
                         "iterations": result.iterations})
            if best is None or result.error < best.error:
                best, best_r = result, r
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(best.assignments_csv())
        _report(args, started, {
            "algo": "kmeans",
            "k": args.k,
            "best_restart": best_r,
            "restart_table": runs,
            "error": best.error,
            "error_trace": best.error_trace.tolist(),
            "means": best.means.tolist(),
            "assignments_file": args.out,
        })
        return EXIT_OK
    if args.cluster_algo == "gmm":
        result = cluster_mod.gmm_em(x, args.k, seed=args.seed)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(result.degrees_csv())
        _report(args, started, {
            "algo": "gmm",
            "k": args.k,
            "iterations": result.iterations,
            "neg_log_likelihood_trace":
                result.neg_log_likelihood_trace.tolist(),
            "means": result.params.means.tolist(),
            "covariances": result.params.covariances.tolist(),
            "probabilities": result.params.probabilities.tolist(),
            "degrees_file": args.out,
        })
        return EXIT_OK
    raise ConfigError(f"unknown clustering algorithm {args.cluster_algo!r}")


def cmd_pca(args):
    started = time.time()
    d, _, _ = _load_dataset(args, need_label=False)
    if args.scatter:
        text = dimred.two_pc_scatter_csv(d.features)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    if args.n_pc is None:
        raise ConfigError("--n-pc is required for pca")
    model = dimred.fit_pca(d.features, args.n_pc)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(model.to_json())
    _report(args, started, {
        "n_pc": args.n_pc,
        "spectrum": model.spectrum.tolist(),
        "reconstruction_error": model.reconstruction_error,
        "model_file": args.out,
    })
    return EXIT_OK


def cmd_normalize(args):
    started = time.time()
    d, feature_cols, _ = _load_dataset(args, need_label=False)
    normed, params = normalize_data(d)
    if args.out:
        _write_dataset_csv(args.out, normed)
    _report(args, started, {
        "features": feature_cols,
        "means": params.means.tolist(),
        "sigmas": params.sigmas.tolist(),
        "out_file": args.out,
    })
    return EXIT_OK


def cmd_split(args):
    started = time.time()
    _check_fraction(args.train_fraction)
    d, _, _ = _load_dataset(args)
    sp = split_data(d, args.train_fraction, args.seed)
    prefix = args.out or "split"
    train_path = f"{prefix}.train.csv"
    val_path = f"{prefix}.val.csv"
    _write_dataset_csv(train_path, sp.train)
    _write_dataset_csv(val_path, sp.val)
    _report(args, started, {
        "train_size": sp.train.m,
        "val_size": sp.val.m,
        "train_file": train_path,
        "val_file": val_path,
    })
    return EXIT_OK


def cmd_gen_toy(args):
    started = time.time()
    w_true = _parse_w_true(args.w_true, args.n)
    spec = ToyModelSpec(w_true, args.sigma2, args.m, args.seed)
    d = generate_toy(spec)
    if not args.out:
        raise ConfigError("--out is required for gen-toy")
    _write_dataset_csv(args.out, d)
    _report(args, started, {
        "m": d.m,
        "n": d.n,
        "sigma2": args.sigma2,
        "w_true": w_true.tolist(),
        "out_file": args.out,
    })
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ermlab",
        description="Empirical-risk-minimization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="input CSV file")
            p.add_argument("--features", default=None,
                           help="comma-separated feature column names")
            p.add_argument("--label", default=None, help="label column name")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="thread hint for the numba backend")
        p.add_argument("--out", default=None, help="output file")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("fit", help="fit one model and report errors")
    add_common(p)
    p.add_argument("--algo", required=True, choices=FIT_ALGOS)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=3)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="polynomial-degree model selection")
    add_common(p)
    p.add_argument("--degree", "--degrees", dest="degrees", default="0:5",
                   help='e.g. "0:8" or "0,2,4"')
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("biasvar", help="Monte-Carlo bias/variance sweep")
    add_common(p, data=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m-train", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--w-true", default="ones")
    p.add_argument("--r-grid", default=None, help='restricted sizes, e.g. "1:8"')
    p.add_argument("--lambda-grid", default=None, help='ridge grid, e.g. "0,0.5,1"')
    p.add_argument("--trials", type=int, default=10_000)
    p.set_defaults(func=cmd_biasvar)

    p = sub.add_parser("cluster", help="k-means / GMM / elbow sweep")
    add_common(p)
    p.add_argument("--algo", dest="cluster_algo", required=True,
                   choices=("kmeans", "gmm", "elbow"))
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--eps", type=float, default=0.0)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("pca", help="principal component analysis")
    add_common(p)
    p.add_argument("--n-pc", type=int, default=None)
    p.add_argument("--scatter", action="store_true",
                   help="emit a 2-PC scatter CSV instead of a report")
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("normalize", help="center and unit-scale features")
    add_common(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("split", help="train/validation split to CSV files")
    add_common(p)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("gen-toy", help="draw a linear-Gaussian toy dataset")
    add_common(p, data=False)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--w-true", default="ones")
    p.set_defaults(func=cmd_gen_toy)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    args._argv = argv
    if args.threads is not None and _accel.BACKEND == "numba":
        import numba

        numba.set_num_threads(max(1, args.threads))
    try:
        if getattr(args, "command", None) == "biasvar":
            if args.r_grid is None and args.lambda_grid is None:
                raise ConfigError("one of --r-grid / --lambda-grid is required")
        return args.func(args)
    except ConfigError as exc:
        print(f"error (config): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"error (data): {exc}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERIC_ERRORS as exc:
        print(f"error (numeric): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ShapeError, ErmlabError) as exc:
        print(f"error (numeric): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
