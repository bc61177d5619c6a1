"""Command line pipeline: simulate -> sample -> fit/cv/bootstrap -> curves -> score -> bench.

Stages communicate through files so partial runs stay inspectable and
resumable.  Every run writes a manifest.json with the fully resolved
configuration; re-running a subcommand with --from-manifest reproduces
the numeric artifacts bitwise (timing fields aside).  DREAM_LOG sets the
log level; every subcommand honors --seed.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .effects import parse_effect
from .errors import DreamError, ValidationError
from .events import read_events_csv, write_events_csv
from .gpr import (
    DEFAULT_GRID_N,
    DEFAULT_JITTER,
    DEFAULT_LENGTH_SCALE,
    CurveEnsemble,
    CurveGrid,
    gpr_posterior,
    read_curves_csv,
    write_curves_csv,
)
from .nam import PRESETS, SubnetSpec, load_model, preset_spec, save_model
from .sampling import read_pairs_csv, sample_controls, write_pairs_csv
from .scoring import score_model
from .simulate import (
    SimConfig,
    default_covariates,
    load_truth,
    save_truth,
    simulate_events,
    staggered_entry_times,
)
from .covariates import CovariateSpec
from .training import (
    TrainConfig,
    bootstrap_refits,
    k_fold_cv,
    train,
    write_cv_csv,
)

MANIFEST_FORMAT = "dream-manifest/1"
log = logging.getLogger("dream")


def _parse_arch(text):
    text = text.strip()
    if text in PRESETS:
        return text
    try:
        return tuple(int(w) for w in text.split(","))
    except ValueError:
        raise ValidationError(
            f"--arch must be a preset {sorted(PRESETS)} or comma widths, got {text!r}"
        )


def _arch_spec(arch, dropout) -> SubnetSpec:
    if isinstance(arch, str) and arch in PRESETS:
        return preset_spec(arch, dropout)
    return SubnetSpec(tuple(arch), dropout)


def _parse_covariate(text):
    """'source' or 'source:effect(p1,p2)' -> (CovariateSpec, EffectSpec)."""
    if ":" in text:
        source, eff = text.split(":", 1)
        effect = parse_effect(eff)
    else:
        source, effect = text, parse_effect("constant")
    return CovariateSpec(source.strip()), effect


def _parse_grid(text):
    """'arch:dropout;arch:dropout' -> [(arch, dropout), ...]."""
    cells = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValidationError(f"grid cell {chunk!r} must be arch:dropout")
        arch, dropout = chunk.rsplit(":", 1)
        cells.append((_parse_arch(arch), float(dropout)))
    if not cells:
        raise ValidationError("empty cv grid")
    return cells


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(
        subnet=_arch_spec(cfg["arch"], cfg["dropout"]),
        batch_size=cfg["batch_size"],
        epochs=cfg["epochs"],
        lr=cfg["lr"],
        beta1=cfg["beta1"],
        beta2=cfg["beta2"],
        eps=cfg["eps"],
        seed=cfg["seed"],
        patience=cfg.get("patience"),
    )


def _require_file(path, flag):
    if not Path(path).is_file():
        raise ValidationError(f"{flag}: no such file {path}")
    return str(path)


# ---------------------------------------------------------------- runners

def run_simulate(cfg, out_dir: Path):
    if cfg["covariates"]:
        parsed = [_parse_covariate(c) for c in cfg["covariates"]]
        covariates = [c for c, _ in parsed]
        effects = [e for _, e in parsed]
    else:
        covariates, effects = default_covariates(2)
    entry = None
    if cfg["regime"] == "growing":
        entry = staggered_entry_times(cfg["nodes"], cfg["events"],
                                      cfg["initial_nodes"])
    sim_cfg = SimConfig(
        node_count=cfg["nodes"], event_count=cfg["events"],
        covariates=covariates, effects=effects,
        regime=cfg["regime"], entry_times=entry, seed=cfg["seed"],
    )
    result = simulate_events(sim_cfg)
    write_events_csv(out_dir / "events.csv", result.seq)
    save_truth(out_dir / "truth.json", result)
    log.info("simulated %d events over %d nodes", cfg["events"], cfg["nodes"])
    return ["events.csv", "truth.json"]


def run_sample(cfg, out_dir: Path):
    sim_cfg, _, provider, risk_set, _ = load_truth(
        _require_file(cfg["truth"], "--truth")
    )
    seq = read_events_csv(_require_file(cfg["events"], "--events"),
                          node_count=sim_cfg.node_count)
    dataset, _, _ = sample_controls(seq, risk_set, provider,
                                    m=cfg["m"], seed=cfg["seed"])
    write_pairs_csv(out_dir / "pairs.csv", dataset)
    log.info("sampled %d pairs (m=%d)", len(dataset), cfg["m"])
    return ["pairs.csv"]


def run_fit(cfg, out_dir: Path):
    dataset = read_pairs_csv(_require_file(cfg["pairs"], "--pairs"))
    model, trace = train(dataset, _train_config(cfg))
    save_model(out_dir / "model.json", model)
    with open(out_dir / "loss_trace.csv", "w") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(trace):
            fh.write(f"{i},{loss!r}\n")
    log.info("fit: loss %.6f -> %.6f", trace[0], trace[-1])
    return ["model.json", "loss_trace.csv"]


def run_cv(cfg, out_dir: Path):
    dataset = read_pairs_csv(_require_file(cfg["pairs"], "--pairs"))
    report = k_fold_cv(dataset, _parse_grid(cfg["grid"]), cfg["k"],
                       _train_config({**cfg, "arch": "model1", "dropout": 0.0}))
    write_cv_csv(out_dir / "cv.csv", report)
    best = report.best()
    log.info("cv best: %s dropout=%g mean=%.6f", best.arch, best.dropout, best.mean)
    return ["cv.csv"]


def run_bootstrap(cfg, out_dir: Path):
    dataset = read_pairs_csv(_require_file(cfg["pairs"], "--pairs"))
    models = bootstrap_refits(dataset, _train_config(cfg), cfg["B"],
                              cfg["seed"], jobs=cfg["jobs"])
    outputs = []
    for b, model in enumerate(models):
        name = f"model_b{b}.json"
        save_model(out_dir / name, model)
        outputs.append(name)
    return outputs


def run_curves(cfg, out_dir: Path):
    models = [load_model(_require_file(p, "--models")) for p in cfg["models"]]
    q = models[0].q
    if any(m.q != q for m in models):
        raise ValidationError("models disagree on covariate count")
    which = cfg["which"] if cfg["which"] else list(range(q))
    squared = cfg["kernel"] == "rbf-squared"
    outputs = []
    for k in which:
        if k < 0 or k >= q:
            raise ValidationError(f"covariate {k} out of range (q={q})")
        x_min = min(m.x_min[k] for m in models)
        x_max = max(m.x_max[k] for m in models)
        grid = CurveGrid.build(k, x_min, x_max, cfg["grid_n"])
        ensemble = CurveEnsemble.from_models(models, k, grid)
        fit = gpr_posterior(ensemble, length_scale=cfg["length_scale"],
                            jitter=cfg["jitter"], squared=squared)
        name = f"curves_k{k}.csv"
        write_curves_csv(out_dir / name, fit, ensemble)
        outputs.append(name)
    return outputs


def run_score(cfg, out_dir: Path):
    dataset = read_pairs_csv(_require_file(cfg["pairs"], "--pairs"))
    model = load_model(_require_file(cfg["model"], "--model"))
    truth = None
    effects = None
    if cfg.get("truth"):
        _, truth, _, _, _ = load_truth(_require_file(cfg["truth"], "--truth"))
        effects = truth.effects
    curves = {}
    if cfg.get("curves_dir"):
        for path in sorted(Path(cfg["curves_dir"]).glob("curves_k*.csv")):
            k = int(path.stem.removeprefix("curves_k"))
            grid, mean, _, _, _ = read_curves_csv(path, covariate=k)
            curves[k] = (grid.x, mean)
    report = score_model(model, dataset, truth=truth, curves=curves,
                         truth_effects=effects)
    report.save(out_dir / "report.json")
    return ["report.json"]


def run_bench(cfg, out_dir: Path):
    from .benchmarks import (
        bench_backends,
        bench_scaling,
        write_backend_csv,
        write_bench_csv,
    )

    config = TrainConfig(subnet=_arch_spec(cfg["arch"], 0.0),
                         batch_size=cfg["batch_size"], epochs=cfg["epochs"],
                         seed=cfg["seed"])
    rows = bench_scaling(cfg["q_list"], events=cfg["events"], nodes=cfg["nodes"],
                         config=config, seed=cfg["seed"])
    write_bench_csv(out_dir / "bench.csv", rows)
    outputs = ["bench.csv"]
    if cfg["backends"]:
        lanes = bench_backends(nodes=cfg["nodes"], events=cfg["events"],
                               seed=cfg["seed"])
        write_backend_csv(out_dir / "backends.csv", lanes)
        outputs.append("backends.csv")
    return outputs


_RUNNERS = {
    "simulate": run_simulate,
    "sample": run_sample,
    "fit": run_fit,
    "cv": run_cv,
    "bootstrap": run_bootstrap,
    "curves": run_curves,
    "score": run_score,
    "bench": run_bench,
}


# ---------------------------------------------------------------- parsing

def _add_train_flags(p):
    p.add_argument("--arch", default="model1",
                   help="preset model1..model4 or comma widths, e.g. 64,128,64")
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--patience", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dream",
        description="Smooth covariate effects in relational event models "
                    "via per-covariate neural subnets.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--from-manifest", default=None,
                       help="re-run with the resolved config of a prior manifest")

    p = sub.add_parser("simulate", help="generate a synthetic event stream")
    common(p)
    p.add_argument("--nodes", type=int, default=100)
    p.add_argument("--events", type=int, default=5000)
    p.add_argument("--covariate", action="append", default=None, dest="covariates",
                   help="source[:effect(p,..)], repeatable; default: "
                        "sender_attr:sine(1,6.283...,0) + receiver_attr:quadratic(0.5,4)")
    p.add_argument("--regime", choices=["full", "growing"], default="full")
    p.add_argument("--initial-nodes", type=int, default=2,
                   help="growing regime: nodes present from the start")

    p = sub.add_parser("sample", help="draw nested case-control pairs")
    common(p)
    p.add_argument("--events", default=None, help="events CSV")
    p.add_argument("--truth", default=None, help="truth.json from simulate")
    p.add_argument("--m", type=int, default=1, help="controls per case")

    p = sub.add_parser("fit", help="train the additive model on pairs")
    common(p)
    p.add_argument("--pairs", default=None)
    _add_train_flags(p)

    p = sub.add_parser("cv", help="k-fold cross-validation over a grid")
    common(p)
    p.add_argument("--pairs", default=None)
    p.add_argument("--grid", default=None,
                   help="cells arch:dropout separated by ';', e.g. "
                        "'model1:0;model2:0.05'")
    p.add_argument("--k", type=int, default=10)
    _add_train_flags(p)

    p = sub.add_parser("bootstrap", help="train B refits on resampled pairs")
    common(p)
    p.add_argument("--pairs", default=None)
    p.add_argument("--B", type=int, default=5, dest="B")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    _add_train_flags(p)

    p = sub.add_parser("curves", help="GPR mean curves and bands from refits")
    common(p)
    p.add_argument("--models", nargs="+", default=None,
                   help="model JSON files (bootstrap refits)")
    p.add_argument("--which", type=int, nargs="*", default=None,
                   help="covariate indices (default: all)")
    p.add_argument("--grid-n", type=int, default=DEFAULT_GRID_N)
    p.add_argument("--length-scale", type=float, default=DEFAULT_LENGTH_SCALE)
    p.add_argument("--jitter", type=float, default=DEFAULT_JITTER)
    p.add_argument("--kernel", choices=["printed", "rbf-squared"],
                   default="printed",
                   help="printed = unsquared distance (default)")

    p = sub.add_parser("score", help="log-PL / KL report for a fitted model")
    common(p)
    p.add_argument("--pairs", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--curves-dir", default=None,
                   help="directory with curves_k*.csv for RMSE vs truth")

    p = sub.add_parser("bench", help="fit-time scaling and kernel lane timings")
    common(p)
    p.add_argument("--q-list", default="2,4,8")
    p.add_argument("--events", type=int, default=20000)
    p.add_argument("--nodes", type=int, default=500)
    p.add_argument("--arch", default="model1")
    p.add_argument("--epochs", type=int, default=3)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--backends", action="store_true",
                   help="also time each kernel lane (numba vs numpy)")

    return parser


_REQUIRED = {
    "sample": ("events", "truth"),
    "fit": ("pairs",),
    "cv": ("pairs", "grid"),
    "bootstrap": ("pairs",),
    "curves": ("models",),
    "score": ("pairs", "model"),
}


def _resolve_config(args) -> dict:
    sub = args.subcommand
    for name in _REQUIRED.get(sub, ()):
        if getattr(args, name, None) in (None, []):
            raise ValidationError(
                f"--{name} is required (or use --from-manifest)"
            )
    if sub == "simulate":
        return {
            "nodes": args.nodes, "events": args.events, "seed": args.seed,
            "covariates": args.covariates, "regime": args.regime,
            "initial_nodes": args.initial_nodes,
        }
    if sub == "sample":
        return {"events": args.events, "truth": args.truth,
                "m": args.m, "seed": args.seed}
    if sub in ("fit", "cv", "bootstrap"):
        cfg = {
            "pairs": args.pairs, "arch": _parse_arch(args.arch),
            "dropout": args.dropout, "epochs": args.epochs,
            "batch_size": args.batch_size, "lr": args.lr,
            "beta1": args.beta1, "beta2": args.beta2, "eps": args.eps,
            "patience": args.patience, "seed": args.seed,
        }
        if sub == "cv":
            cfg.update(grid=args.grid, k=args.k)
        if sub == "bootstrap":
            cfg.update(B=args.B, jobs=args.jobs)
        return cfg
    if sub == "curves":
        return {
            "models": list(args.models), "which": args.which,
            "grid_n": args.grid_n, "length_scale": args.length_scale,
            "jitter": args.jitter, "kernel": args.kernel, "seed": args.seed,
        }
    if sub == "score":
        return {"pairs": args.pairs, "model": args.model, "truth": args.truth,
                "curves_dir": args.curves_dir, "seed": args.seed}
    if sub == "bench":
        return {
            "q_list": [int(q) for q in str(args.q_list).split(",") if q.strip()],
            "events": args.events, "nodes": args.nodes,
            "arch": _parse_arch(args.arch),
            "epochs": args.epochs, "batch_size": args.batch_size,
            "backends": args.backends, "seed": args.seed,
        }
    raise ValidationError(f"unknown subcommand {sub!r}")


def _arch_jsonable(cfg):
    out = dict(cfg)
    if isinstance(out.get("arch"), tuple):
        out["arch"] = list(out["arch"])
    return out


def write_manifest(out_dir: Path, subcommand, cfg, outputs, wall_clock):
    doc = {
        "format": MANIFEST_FORMAT,
        "subcommand": subcommand,
        "config": _arch_jsonable(cfg),
        "seed": cfg.get("seed"),
        "outputs": outputs,
        "versions": {
            "manifest": MANIFEST_FORMAT,
            "model": "dream-nam/1",
            "truth": "dream-truth/1",
        },
        "wall_clock_seconds": wall_clock,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest_config(path, subcommand):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValidationError(f"{path}: not a {MANIFEST_FORMAT} file")
    if doc.get("subcommand") != subcommand:
        raise ValidationError(
            f"{path}: manifest is for {doc.get('subcommand')!r}, not {subcommand!r}"
        )
    cfg = doc["config"]
    if isinstance(cfg.get("arch"), list):
        cfg["arch"] = tuple(cfg["arch"])
    return cfg


def _setup_logging():
    level = os.environ.get("DREAM_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.from_manifest:
            cfg = load_manifest_config(args.from_manifest, args.subcommand)
        else:
            cfg = _resolve_config(args)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        outputs = _RUNNERS[args.subcommand](cfg, out_dir)
        write_manifest(out_dir, args.subcommand, cfg, outputs,
                       time.perf_counter() - t0)
        return 0
    except DreamError as err:
        print(err.one_line(), file=sys.stderr)
        return 1
    except FileNotFoundError as err:
        print(f"error: io: no such file {err.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
