"""Command line driver.

GREEN_SSL_THREADS caps the BLAS/OpenMP thread pools; the cap has to land in
the environment before numpy first loads, so the heavy modules are imported
lazily inside the command handlers, never at module scope.

Exit codes: 0 success, 2 configuration error (bad flags, bad config file,
missing or malformed inputs), 3 runtime error during execution.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

TOY_NAMES = ("two-ring", "balance", "blobs")
METHOD_CHOICES = ("gf", "gfg", "llgc", "hf", "1nn")
_BLAS_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
              "VECLIB_MAXIMUM_THREADS", "NUMEXPR_NUM_THREADS")

# Mirrors the module-level defaults; kept literal so building the parser
# needs no numpy import.
DEFAULTS = {
    "label_column": -1,
    "inner": 500, "outer": 1000, "r_inner": 10.0, "r_outer": 25.0,
    "noise": 0.4,
    "n": 2000, "dim": 10, "classes": 4, "spread": 1.0, "separation": 6.0,
    "data_seed": 0,
    "k": 20, "gamma": 1.0, "mu": 1e-5, "eta": 1e6,
    "per_class": 10, "seeds": 5, "out": "results",
    "m_list": "64,128,256,512",
    "methods": "gfg,llgc",
    "per_class_list": "1-20",
}


class ConfigError(Exception):
    """Anything wrong with flags, config files, or input data shape."""


@dataclass
class RunConfig:
    """Validated parameters for one evaluation run."""

    method: str
    per_class: int
    seeds: list
    k: int = DEFAULTS["k"]
    gamma: float = DEFAULTS["gamma"]
    mu: float = DEFAULTS["mu"]
    eta: float = DEFAULTS["eta"]
    m: int | None = None
    out: str = DEFAULTS["out"]

    def __post_init__(self):
        if self.method not in METHOD_CHOICES + ("gfa",):
            raise ConfigError(f"unknown method {self.method!r}")
        if self.per_class < 1:
            raise ConfigError("per-class must be >= 1")
        if not self.seeds:
            raise ConfigError("need at least one seed")


def _apply_thread_cap():
    cap = os.environ.get("GREEN_SSL_THREADS")
    if cap is None:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise ConfigError(f"GREEN_SSL_THREADS must be a positive integer, got {cap!r}")
    for var in _BLAS_VARS:
        os.environ[var] = cap


def _synth_parent():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("synthetic data parameters")
    g.add_argument("--inner", type=int, help="two-ring: inner ring size (default 500)")
    g.add_argument("--outer", type=int, help="two-ring: outer ring size (default 1000)")
    g.add_argument("--r-inner", type=float, help="two-ring: inner radius (default 10)")
    g.add_argument("--r-outer", type=float, help="two-ring: outer radius (default 25)")
    g.add_argument("--noise", type=float, help="two-ring: radial noise std (default 0.4)")
    g.add_argument("--n", type=int, help="blobs: sample count (default 2000)")
    g.add_argument("--dim", type=int, help="blobs: feature dimension (default 10)")
    g.add_argument("--classes", type=int, help="blobs: class count (default 4)")
    g.add_argument("--spread", type=float, help="blobs: within-class std (default 1)")
    g.add_argument("--separation", type=float, help="blobs: center spacing (default 6)")
    g.add_argument("--data-seed", type=int, help="generator seed (default 0)")
    return p


def _data_parent():
    p = argparse.ArgumentParser(add_help=False, parents=[_synth_parent()])
    g = p.add_argument_group("dataset")
    g.add_argument("--data", help="CSV with feature columns and a label column")
    g.add_argument("--label-column", type=int,
                   help="label column index, negatives from the end (default -1)")
    g.add_argument("--toy", choices=TOY_NAMES, help="synthetic dataset instead of --data")
    return p


def _common_parent():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON object of flag defaults; explicit flags win")
    p.add_argument("--out", help="output directory (default results)")
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="green-ssl",
        description="Graph-based semi-supervised classification via Green's "
                    "functions of the graph Laplacian.")
    sub = parser.add_subparsers(dest="command", required=True)
    common, data = _common_parent(), _data_parent()

    run = sub.add_parser("run", parents=[common, data],
                         help="evaluate one method over seeded label draws")
    run.add_argument("--method", choices=METHOD_CHOICES + ("gfa",),
                     help="classifier to run")
    run.add_argument("--k", type=int, help="graph neighbors per sample (default 20)")
    run.add_argument("--gamma", type=float, help="LLGC regularizer (default 1)")
    run.add_argument("--mu", type=float, help="uniform perturbation weight (default 1e-5)")
    run.add_argument("--eta", type=float, help="balance penalty weight (default 1e6)")
    run.add_argument("--anchors", type=int, help="anchor count m for --method gfa")
    run.add_argument("--anchors-out", help="also export the anchor coordinates as CSV")
    run.add_argument("--per-class", type=int, help="labeled samples per class (default 10)")
    run.add_argument("--seeds", type=int, help="number of trials, seeds 0..N-1 (default 5)")
    run.set_defaults(func=cmd_run)

    bg = sub.add_parser("build-graph", parents=[common, data],
                        help="write the kNN Gaussian graph as i j w triples")
    bg.add_argument("--k", type=int, help="graph neighbors per sample (default 20)")
    bg.add_argument("--graph-out", help="triple file path (default <out>/graph.txt)")
    bg.set_defaults(func=cmd_build_graph)

    bench = sub.add_parser("bench-anchors", parents=[common, data],
                           help="accuracy/time scaling of the anchored solver over m")
    bench.add_argument("--m-list", help="ascending powers of two, comma separated "
                                        "(default 64,128,256,512)")
    bench.add_argument("--k", type=int, help="anchors per sample row (default 20)")
    bench.add_argument("--mu", type=float, help="uniform perturbation weight (default 1e-5)")
    bench.add_argument("--per-class", type=int, help="labeled samples per class (default 10)")
    bench.add_argument("--seeds", type=int, help="number of trials (default 5)")
    bench.set_defaults(func=cmd_bench_anchors)

    curve = sub.add_parser("label-curve", parents=[common, data],
                           help="accuracy versus labeled samples per class")
    curve.add_argument("--methods", help="comma separated methods (default gfg,llgc)")
    curve.add_argument("--per-class-list", help='counts, e.g. "1-20" or "1,2,5,10"')
    curve.add_argument("--k", type=int, help="graph neighbors per sample (default 20)")
    curve.add_argument("--gamma", type=float, help="LLGC regularizer (default 1)")
    curve.add_argument("--mu", type=float, help="uniform perturbation weight (default 1e-5)")
    curve.add_argument("--eta", type=float, help="balance penalty weight (default 1e6)")
    curve.add_argument("--seeds", type=int, help="number of trials per point (default 5)")
    curve.set_defaults(func=cmd_label_curve)

    toy = sub.add_parser("toy", parents=[common, _synth_parent()],
                         help="generate a synthetic dataset CSV")
    toy.add_argument("name", choices=TOY_NAMES)
    toy.set_defaults(func=cmd_toy)
    return parser


def _merge_config(args):
    """Overlay config-file values under explicit flags, then hard defaults."""
    merged = vars(args).copy()
    path = merged.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path}: invalid JSON at line "
                              f"{exc.lineno} column {exc.colno}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"config {path}: expected a JSON object of flag values")
        for key, val in cfg.items():
            dest = key.replace("-", "_")
            if dest in ("command", "func", "name", "config") or dest not in merged:
                raise ConfigError(f"config {path}: unknown key {key!r} "
                                  f"for command {merged['command']}")
            if merged[dest] is None:
                merged[dest] = val
    for key, val in merged.items():
        if val is None and key in DEFAULTS:
            merged[key] = DEFAULTS[key]
    return argparse.Namespace(**merged)


def _seed_list(ns):
    try:
        count = int(ns.seeds)
    except (TypeError, ValueError):
        raise ConfigError(f"--seeds must be an integer count, got {ns.seeds!r}") from None
    if count < 1:
        raise ConfigError("--seeds must be >= 1")
    return list(range(count))


def _parse_counts(text):
    """Parse "1-20" / "1,2,5-8" into a sorted list of distinct positive ints."""
    out = []
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        try:
            if "-" in token:
                lo, hi = token.split("-", 1)
                lo, hi = int(lo), int(hi)
                if lo > hi:
                    raise ValueError
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(token))
        except ValueError:
            raise ConfigError(f"cannot parse count token {token!r}") from None
    if not out or min(out) < 1:
        raise ConfigError(f"need positive counts, got {text!r}")
    return sorted(set(out))


def _gen_toy(ns, name):
    from . import dataio
    try:
        if name == "two-ring":
            return dataio.gen_two_ring(n_inner=ns.inner, n_outer=ns.outer,
                                       r_inner=ns.r_inner, r_outer=ns.r_outer,
                                       noise=ns.noise, seed=ns.data_seed)
        if name == "balance":
            return dataio.gen_balance()
        return dataio.gen_blobs(n=ns.n, d=ns.dim, c=ns.classes, spread=ns.spread,
                                separation=ns.separation, seed=ns.data_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_dataset(ns):
    """Resolve --data/--toy into (Dataset, short name)."""
    from . import dataio
    if ns.data and ns.toy:
        raise ConfigError("--data and --toy are mutually exclusive")
    if ns.data:
        try:
            ds = dataio.load_csv(ns.data, label_column=ns.label_column)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        return ds, os.path.splitext(os.path.basename(ns.data))[0]
    if ns.toy is None:
        raise ConfigError("no dataset: pass --data FILE or --toy NAME")
    return _gen_toy(ns, ns.toy), ns.toy


def cmd_run(ns):
    if not ns.method:
        raise ConfigError("no method given: pass --method or set it in the config")
    if ns.method == "gfa" and ns.anchors is None:
        raise ConfigError("--method gfa needs --anchors M (a power of two)")
    ds, dsname = _load_dataset(ns)
    cfg = RunConfig(method=ns.method, per_class=int(ns.per_class),
                    seeds=_seed_list(ns), k=int(ns.k), gamma=float(ns.gamma),
                    mu=float(ns.mu), eta=float(ns.eta), out=ns.out,
                    m=None if ns.anchors is None else int(ns.anchors))
    from . import dataio, evaluate, labels, plots
    os.makedirs(cfg.out, exist_ok=True)
    results = evaluate.run_trials(ds, cfg.method, cfg.per_class, cfg.seeds,
                                  k=cfg.k, gamma=cfg.gamma, mu=cfg.mu,
                                  eta=cfg.eta, m=cfg.m)
    summary = evaluate.summarize(results)
    summary["dataset"] = dsname
    summary["per_class"] = cfg.per_class
    summary["params"] = {"k": cfg.k, "gamma": cfg.gamma, "mu": cfg.mu,
                         "eta": cfg.eta, "m": cfg.m}
    evaluate.append_ledger(os.path.join(cfg.out, "ledger.csv"), results,
                           dsname, cfg.per_class)
    evaluate.write_summary(os.path.join(cfg.out, "summary.json"), summary)
    if summary["failed"]:
        for r in results:
            if r.failed:
                print(f"seed {r.seed}: {r.error}", file=sys.stderr)
        return 3
    split = dataio.sample_split(ds, cfg.per_class, seed=cfg.seeds[0])
    pred, _ = evaluate.solve_once(ds, split, cfg.method, k=cfg.k, gamma=cfg.gamma,
                                  mu=cfg.mu, eta=cfg.eta, m=cfg.m,
                                  anchor_seed=cfg.seeds[0])
    labels.write_predictions(os.path.join(cfg.out, "predictions.csv"), pred, ds.truth)
    if ns.anchors_out and cfg.method == "gfa":
        from . import anchored
        points = anchored.bkhk(ds, cfg.m, seed=cfg.seeds[0]).points
        with open(ns.anchors_out, "w") as fh:
            for row in points:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    if ds.d == 2:
        plots.plot_two_ring(ds, split, {cfg.method: pred},
                            os.path.join(cfg.out, f"run_{cfg.method}.png"))
    print(f"{cfg.method} on {dsname}: accuracy "
          f"{summary['mean_accuracy']:.4f} +- {summary['std_accuracy']:.4f} "
          f"over {summary['trials']} trials -> {cfg.out}")
    return 0


def cmd_build_graph(ns):
    ds, dsname = _load_dataset(ns)
    k = int(ns.k)
    if not 1 <= k < ds.n:
        raise ConfigError(f"need 1 <= k < n, got k={k} with n={ds.n}")
    from . import graph
    sim = graph.build_knn_gaussian(ds, k=k)
    comps = graph.connected_components(sim)
    path = ns.graph_out or os.path.join(ns.out, "graph.txt")
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    graph.save_graph(sim, path)
    print(f"wrote {path}: {dsname} n={sim.n} edges={sim.matrix.nnz // 2} "
          f"components={comps.count}")
    return 0


def cmd_bench_anchors(ns):
    ds, dsname = _load_dataset(ns)
    m_list = _parse_counts(ns.m_list)
    for m in m_list:
        if m < 2 or m & (m - 1):
            raise ConfigError(f"m-list entries must be powers of two >= 2, got {m}")
    if m_list != sorted(m_list) or len(set(m_list)) != len(m_list):
        raise ConfigError("m-list must be strictly ascending")
    if int(ns.k) >= m_list[0]:
        raise ConfigError(f"anchor neighbors k={ns.k} must be < the smallest m "
                          f"({m_list[0]})")
    seeds = _seed_list(ns)
    from . import evaluate, plots
    os.makedirs(ns.out, exist_ok=True)
    rows = []
    for m in m_list:
        results = evaluate.run_trials(ds, "gfa", int(ns.per_class), seeds,
                                      k=int(ns.k), mu=float(ns.mu), m=m)
        ok = [r for r in results if not r.failed]
        if not ok:
            raise RuntimeError(f"all trials failed at m={m}: {results[0].error}")
        rows.append((m, sum(r.accuracy for r in ok) / len(ok),
                     sum(r.solve_seconds for r in ok) / len(ok)))
    csv_path = os.path.join(ns.out, "bench_anchors.csv")
    with open(csv_path, "w") as fh:
        fh.write("m,mean_accuracy,mean_solve_seconds\n")
        for m, acc, sec in rows:
            fh.write(f"{m},{acc!r},{sec!r}\n")
    plots.plot_anchor_scaling([r[0] for r in rows], [r[1] for r in rows],
                              [r[2] for r in rows],
                              os.path.join(ns.out, "bench_anchors.png"))
    for m, acc, sec in rows:
        print(f"m={m:5d}  accuracy={acc:.4f}  solve={sec:.4f}s")
    print(f"wrote {csv_path}")
    return 0


def cmd_label_curve(ns):
    ds, dsname = _load_dataset(ns)
    methods = [tok.strip() for tok in str(ns.methods).split(",") if tok.strip()]
    unknown = [m for m in methods if m not in METHOD_CHOICES]
    if not methods or unknown:
        raise ConfigError(f"bad method list {ns.methods!r}; pick from {METHOD_CHOICES}")
    counts = _parse_counts(ns.per_class_list)
    seeds = _seed_list(ns)
    from . import evaluate, plots
    os.makedirs(ns.out, exist_ok=True)
    acc_by_method = {m: [] for m in methods}
    for per_class in counts:
        for method in methods:
            results = evaluate.run_trials(ds, method, per_class, seeds,
                                          k=int(ns.k), gamma=float(ns.gamma),
                                          mu=float(ns.mu), eta=float(ns.eta))
            ok = [r for r in results if not r.failed]
            if not ok:
                print(f"warning: all trials failed for {method} at "
                      f"per_class={per_class}: {results[0].error}", file=sys.stderr)
                acc_by_method[method].append(float("nan"))
            else:
                acc_by_method[method].append(sum(r.accuracy for r in ok) / len(ok))
    csv_path = os.path.join(ns.out, "label_curve.csv")
    with open(csv_path, "w") as fh:
        fh.write("per_class," + ",".join(methods) + "\n")
        for i, per_class in enumerate(counts):
            row = ",".join(repr(acc_by_method[m][i]) for m in methods)
            fh.write(f"{per_class},{row}\n")
    plots.plot_label_curve(counts, acc_by_method,
                           os.path.join(ns.out, "label_curve.png"))
    print(f"wrote {csv_path}")
    return 0


def cmd_toy(ns):
    ds = _gen_toy(ns, ns.name)
    from . import dataio, plots
    os.makedirs(ns.out, exist_ok=True)
    path = os.path.join(ns.out, f"{ns.name}.csv")
    dataio.save_csv(ds, path)
    message = f"wrote {path}: n={ds.n} d={ds.d} classes={int(ds.truth.max())}"
    if ds.d == 2:
        figure = os.path.join(ns.out, f"{ns.name}.png")
        plots.plot_points(ds, figure)
        message += f" (+ {figure})"
    print(message)
    return 0


def main(argv=None):
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
        ns = _merge_config(args)
        func = ns.func
        del ns.func
        return func(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
