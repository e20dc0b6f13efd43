"""Command-line entry point.

Subcommands: gen-synth, attack, pipeline, check-bounds, train, evaluate.

Every subcommand accepts ``--config FILE`` with ``key = value`` lines (keys
are flag names without the leading dashes).  Explicit flags override the
file, which overrides built-in defaults.  Relative output paths are placed
under ``$HYPERINJECT_OUTDIR`` when it is set.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 bound failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .attack import AttackConfig, random_injection_baseline, th_attack
from .bounds import (
    PerturbationScenario,
    check_single_path_amplification,
    check_spectral_shrinkage,
    check_upper_bound,
    random_scenario,
)
from .errors import (
    BoundViolation,
    CrossFileCountMismatch,
    EmptyCandidateSet,
    EmptyMask,
    InvalidConfig,
    InvalidSpec,
    MissingLabels,
    NonFiniteValue,
    ParseError,
    ValidationFailure,
    ZeroNormHyperedgeFeature,
)
from .hypergraph import Hypergraph, InjectionPlan, inject_nodes
from .io import load, write_hypergraph, write_report
from .models import MODEL_KINDS, HgnnParams, TrainConfig, evaluate, train
from .pipeline import ABLATIONS, run_pipeline
from .synthetic import SyntheticSpec, generate_synthetic

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BOUND = 0, 1, 2, 3
OUTDIR_ENV = "HYPERINJECT_OUTDIR"

USAGE_ERRORS = (InvalidConfig, InvalidSpec)
DATA_ERRORS = (ParseError, CrossFileCountMismatch, ValidationFailure, MissingLabels, EmptyMask,
               EmptyCandidateSet, ZeroNormHyperedgeFeature, NonFiniteValue, FileNotFoundError, OSError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_path(p) -> Path:
    p = Path(p)
    base = os.environ.get(OUTDIR_ENV)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def read_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {s!r}")


def _seed_list(s):
    try:
        seeds = [int(t) for t in str(s).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers: {s!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


# argument groups -------------------------------------------------------------

def _add_attack_flags(p):
    d = AttackConfig()
    g = p.add_argument_group("attack")
    g.add_argument("--eta", type=float, default=d.eta, help="perturbation rate, budget = floor(eta*N)")
    g.add_argument("--tau", type=int, default=d.tau, help="pivotality level (hyperdegree threshold)")
    g.add_argument("--lambda", dest="lam", type=float, default=d.lam, help="hinge regularization weight")
    g.add_argument("--t", type=float, default=d.t, help="similarity threshold")
    g.add_argument("--mu", type=float, default=d.mu, help="std of the seed noise")
    g.add_argument("--inverter-hidden", type=int, default=d.hidden)
    g.add_argument("--inverter-depth", type=int, default=d.depth)
    g.add_argument("--inverter-epochs", type=int, default=d.epochs)
    g.add_argument("--inverter-lr", type=float, default=d.lr)
    g.add_argument("--match-scale", type=_bool, nargs="?", const=True, default=d.match_scale)


def _add_train_flags(p):
    d = TrainConfig()
    g = p.add_argument_group("training")
    g.add_argument("--hidden", type=int, default=d.hidden)
    g.add_argument("--epochs", type=int, default=d.epochs)
    g.add_argument("--lr", type=float, default=d.lr)
    g.add_argument("--weight-decay", type=float, default=d.weight_decay)


def _attack_config(args, seed=None, ablations=()) -> AttackConfig:
    flags = {ABLATIONS[a]: True for a in ablations}
    return AttackConfig(
        eta=args.eta, tau=args.tau, lam=args.lam, t=args.t, mu=args.mu,
        hidden=args.inverter_hidden, depth=args.inverter_depth, epochs=args.inverter_epochs,
        lr=args.inverter_lr, seed=args.seed if seed is None else seed,
        match_scale=bool(args.match_scale), **flags,
    )


def _train_config(args) -> TrainConfig:
    return TrainConfig(hidden=args.hidden, epochs=args.epochs, lr=args.lr,
                       weight_decay=args.weight_decay, seed=args.seed)


def _ablation_list(values):
    out = []
    for v in values or ():
        for tok in str(v).split(","):
            tok = tok.strip()
            if tok:
                if tok not in ABLATIONS:
                    raise UsageError(f"unknown ablation {tok!r}; choose from {sorted(ABLATIONS)}")
                out.append(tok)
    return out


# subcommands -----------------------------------------------------------------

def cmd_gen_synth(args):
    spec = SyntheticSpec(
        num_nodes=args.num_nodes, num_classes=args.num_classes, num_hyperedges=args.num_hyperedges,
        p_in=args.p_in, size_min=args.size_min, size_max=args.size_max, num_features=args.num_features,
        signal=args.signal, flip=args.flip, seed=args.seed,
    )
    G = generate_synthetic(spec)
    bundle = write_hypergraph(G, _out_path(args.out))
    print(f"wrote {bundle.structure} ({G.num_nodes} nodes, {G.num_hyperedges} hyperedges)")
    return EXIT_OK


def cmd_attack(args):
    G = load(args.data)
    ablations = _ablation_list(args.ablation)
    cfg = _attack_config(args, ablations=ablations)
    out = _out_path(args.out)
    start = time.perf_counter()
    if args.baseline == "random":
        A = random_injection_baseline(G, cfg.eta, cfg.mu, cfg.seed)
        info = {"method": "random", "budget": A.injected_count,
                "targets": sorted(A.origin_map.values())}
    else:
        A, rep = th_attack(G, cfg)
        info = rep.as_dict()
        info.pop("wall_time")
    bundle = write_hypergraph(A, out)
    report = {
        "tool": {"name": "hyperinject", "version": __version__},
        "config": {**asdict(cfg), "baseline": args.baseline, "ablations": ablations},
        "attack": info,
        "injected": A.injected_count,
    }
    write_report(report, f"{out}.attack.json")
    write_report({"attack_seconds": time.perf_counter() - start}, f"{out}.attack.timings.json")
    print(f"wrote {bundle.structure} with {A.injected_count} injected nodes")
    return EXIT_OK


def _require_supervision(G):
    if G.labels is None:
        raise MissingLabels("dataset has no labels file")
    if G.masks is None:
        raise MissingLabels("dataset has no split file")


def cmd_pipeline(args):
    G = load(args.data)
    _require_supervision(G)
    ablations = _ablation_list(args.ablations)
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in MODEL_KINDS:
            raise UsageError(f"unknown model {m!r}; choose from {MODEL_KINDS}")
    acfg = _attack_config(args, seed=args.seeds[0])
    tcfg = TrainConfig(hidden=args.hidden, epochs=args.epochs, lr=args.lr,
                       weight_decay=args.weight_decay, seed=args.seeds[0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report, timings = run_pipeline(G, args.seeds, acfg, tcfg, models, ablations)
    out = _out_path(args.out)
    write_report(report, out)
    write_report(timings, out.with_name(out.name.replace(".json", "") + ".timings.json"))
    for kind, conds in report["summary"].items():
        row = "  ".join(f"{c}={v['accuracy']['mean']:.4f}" for c, v in conds.items())
        print(f"{kind}: {row}")
    print(f"wrote {out}")
    return EXIT_OK


def _shrinkage_trial(rng, s: PerturbationScenario):
    inc = s.incidence
    G = Hypergraph(inc, np.zeros((inc.num_nodes, 1)))
    k = int(rng.integers(0, inc.num_hyperedges + 1))
    targets = np.sort(rng.choice(inc.num_hyperedges, size=k, replace=False))
    A = inject_nodes(G, InjectionPlan(tuple(targets.tolist()), np.zeros((k, 1))))
    return targets.tolist(), check_spectral_shrinkage(G, A)


def _verdict(s, tau, targets=None):
    up = check_upper_bound(s)
    sp = check_single_path_amplification(s, tau)
    out = {
        "upper_bound_holds": up.holds,
        "min_slack": up.min_slack,
        "single_path_exact": sp.exact_holds,
        "single_path_max_error": sp.max_exact_error,
        "lower_bound_counterexamples": len(sp.counterexamples),
    }
    if targets is not None:
        inc = s.incidence
        G = Hypergraph(inc, np.zeros((inc.num_nodes, 1)))
        A = inject_nodes(G, InjectionPlan(tuple(targets), np.zeros((len(targets), 1))))
        out["spectral_shrinkage"] = check_spectral_shrinkage(G, A).holds
    out["passed"] = out["upper_bound_holds"] and out["single_path_exact"] and out.get("spectral_shrinkage", True)
    return out


def cmd_check_bounds(args):
    out = _out_path(args.out) if args.out else None
    if args.replay:
        blob = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        s = PerturbationScenario.from_dict(blob["scenario"])
        verdict = _verdict(s, blob.get("tau", args.tau), blob.get("targets"))
        text = json.dumps(verdict, sort_keys=True, indent=2)
        print(text)
        if out:
            write_report(verdict, out)
        return EXIT_OK if verdict["passed"] else EXIT_BOUND

    rng = np.random.default_rng(args.seed)
    base = None
    if args.data:
        base = load(args.data).incidence
    else:
        n, m = args.random
        if n < 1 or m < 1:
            raise UsageError("--random needs N >= 1 and M >= 1")
    trials, failures = [], []
    for trial in range(args.trials):
        if base is not None:
            s = PerturbationScenario(base, rng.normal(size=(base.num_hyperedges, args.dim)),
                                     rng.uniform(0.1, 3.0, size=base.num_hyperedges))
        else:
            s = random_scenario(rng, n, m, args.dim)
        targets, _ = _shrinkage_trial(rng, s)
        verdict = _verdict(s, args.tau, targets)
        trials.append(verdict)
        if not verdict["passed"]:
            failures.append(trial)
            dump = {"scenario": s.to_dict(), "tau": args.tau, "targets": targets, "trial": trial}
            dest = (out.parent if out else Path(".")) / f"bound-violation-{trial}.json"
            write_report(dump, dest)
            print(f"trial {trial}: violation written to {dest}", file=sys.stderr)
    summary = {
        "tool": {"name": "hyperinject", "version": __version__},
        "trials": args.trials,
        "seed": args.seed,
        "source": args.data or {"num_nodes": args.random[0], "num_hyperedges": args.random[1]},
        "failures": failures,
        "min_slack": min(t["min_slack"] for t in trials),
        "max_single_path_error": max(t["single_path_max_error"] for t in trials),
        "lower_bound_counterexamples": sum(t["lower_bound_counterexamples"] for t in trials),
        "passed": not failures,
    }
    if out:
        write_report(summary, out)
    print(json.dumps({k: summary[k] for k in ("trials", "failures", "min_slack", "passed")}, sort_keys=True))
    if failures:
        raise BoundViolation(f"{len(failures)} of {args.trials} trials violated a hard bound")
    return EXIT_OK


def _params_to_json(params: HgnnParams) -> dict:
    return {"kind": params.kind, "theta0": params.theta0.tolist(), "theta1": params.theta1.tolist()}


def _params_from_json(blob) -> HgnnParams:
    return HgnnParams(np.array(blob["theta0"], dtype=np.float64), np.array(blob["theta1"], dtype=np.float64),
                      blob["kind"])


def cmd_train(args):
    G = load(args.data)
    _require_supervision(G)
    params, trace = train(G, args.model, _train_config(args))
    write_report({"params": _params_to_json(params), "best_epoch": trace.best_epoch,
                  "final_loss": trace.loss[-1]}, _out_path(args.out))
    print(f"trained {args.model} model, best epoch {trace.best_epoch}; wrote {_out_path(args.out)}")
    return EXIT_OK


def cmd_evaluate(args):
    G = load(args.data)
    _require_supervision(G)
    blob = json.loads(Path(args.params).read_text(encoding="utf-8"))
    params = _params_from_json(blob.get("params", blob))
    m = evaluate(params, G, G.mask(args.split))
    record = {"split": args.split, "model": params.kind, **m.as_dict()}
    if args.out:
        write_report(record, _out_path(args.out))
    print(json.dumps({"accuracy": m.accuracy, "macro_f1": m.macro_f1}, sort_keys=True))
    return EXIT_OK


# parser ----------------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="hyperinject", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"hyperinject {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(p):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--seed", type=int, default=0)

    d = SyntheticSpec()
    p = sub.add_parser("gen-synth", help="write a planted-partition dataset")
    common(p)
    p.add_argument("--num-nodes", type=int, default=d.num_nodes)
    p.add_argument("--num-classes", type=int, default=d.num_classes)
    p.add_argument("--num-hyperedges", type=int, default=d.num_hyperedges)
    p.add_argument("--p-in", type=float, default=d.p_in)
    p.add_argument("--size-min", type=int, default=d.size_min)
    p.add_argument("--size-max", type=int, default=d.size_max)
    p.add_argument("--num-features", type=int, default=d.num_features)
    p.add_argument("--signal", type=float, default=d.signal)
    p.add_argument("--flip", type=float, default=d.flip)
    p.add_argument("--out", default="synthetic", help="output stem")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("attack", help="inject malicious nodes into a dataset")
    common(p)
    p.add_argument("--data", required=True, help="dataset stem")
    _add_attack_flags(p)
    p.add_argument("--ablation", action="append", help="hr, fi or cdl (repeatable)")
    p.add_argument("--baseline", choices=["random"], default=None)
    p.add_argument("--out", default="attacked", help="output stem")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("pipeline", help="clean / attacked / random poisoning experiment")
    common(p)
    p.add_argument("--data", required=True, help="dataset stem")
    _add_attack_flags(p)
    _add_train_flags(p)
    p.add_argument("--seeds", type=_seed_list, default=[0], help="comma-separated seeds")
    p.add_argument("--models", default=",".join(MODEL_KINDS))
    p.add_argument("--ablations", action="append", help="hr, fi, cdl (comma-separated or repeated)")
    p.add_argument("--out", default="pipeline.report.json")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("check-bounds", help="verify the perturbation bounds on random scenarios")
    common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", help="dataset stem whose structure is used")
    src.add_argument("--random", nargs=2, type=int, metavar=("N", "M"), default=[30, 20])
    src.add_argument("--replay", help="re-run a serialized scenario")
    p.add_argument("--trials", type=_positive_int, default=100)
    p.add_argument("--dim", type=_positive_int, default=8)
    p.add_argument("--tau", type=_positive_int, default=2)
    p.add_argument("--out", default=None, help="summary report path")
    p.set_defaults(func=cmd_check_bounds)

    p = sub.add_parser("train", help="train a victim model")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, default=MODEL_KINDS[0])
    _add_train_flags(p)
    p.add_argument("--out", default="params.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate trained parameters on a split")
    common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)
    return parser


def _apply_config_file(parser, argv):
    """Second parse with config-file values installed as subparser defaults."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    values = read_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in values.items():
        if key not in known:
            raise UsageError(f"{args.config}: unknown key {key!r}")
        action = known[key]
        if isinstance(action, argparse._AppendAction):
            defaults[key] = [value]
        elif action.type is _bool or isinstance(action, argparse._StoreTrueAction):
            defaults[key] = _bool(value)
        elif action.nargs in (2, "+", "*"):
            defaults[key] = [action.type(v) if action.type else v for v in value.split()]
        else:
            defaults[key] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = _apply_config_file(parser, argv)
        except SystemExit as exc:  # --help, --version and argparse usage errors
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return args.func(args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"hyperinject: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BoundViolation as exc:
        print(f"hyperinject: {exc}", file=sys.stderr)
        return EXIT_BOUND
    except DATA_ERRORS as exc:
        print(f"hyperinject: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"hyperinject: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
