"""Poisoning experiments: clean vs attacked vs random-baseline training runs."""

from __future__ import annotations

import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .attack import AttackConfig, random_injection_baseline, th_attack
from .bounds import (
    PerturbationScenario,
    check_single_path_amplification,
    check_spectral_shrinkage,
    check_upper_bound,
)
from .models import MODEL_KINDS, TrainConfig, evaluate, hyperedge_features_simplified, train

ABLATIONS = {
    "hr": "disable_recognizer",
    "fi": "disable_inverter",
    "cdl": "disable_cosine_loss",
}


def injection_scenario(G, A) -> PerturbationScenario:
    """Per-hyperedge change of summed features caused by the injection, on the clean structure."""
    z_clean = hyperedge_features_simplified(G)
    z_att = hyperedge_features_simplified(A)
    return PerturbationScenario(G.incidence, z_att - z_clean, np.ones(G.num_hyperedges))


def bound_summary(G, A, tau) -> dict:
    shrink = check_spectral_shrinkage(G, A)
    s = injection_scenario(G, A)
    up = check_upper_bound(s)
    sp = check_single_path_amplification(s, tau)
    return {
        "spectral_shrinkage": shrink.holds,
        "rho_clean": shrink.rho_clean,
        "rho_attacked": shrink.rho_attacked,
        "upper_bound_holds": up.holds,
        "upper_bound_min_slack": up.min_slack,
        "single_path_exact": sp.exact_holds,
        "single_path_max_error": sp.max_exact_error,
        "lower_bound_counterexamples": len(sp.counterexamples),
    }


def _metrics_record(params, G):
    m = evaluate(params, G, G.mask("test"))
    return {"accuracy": m.accuracy, "macro_f1": m.macro_f1}


def run_seed(G, seed: int, attack_config: AttackConfig, train_config: TrainConfig,
             models=MODEL_KINDS, baseline=True, ablations=(), timings=None) -> dict:
    """All cells for one seed.  ``timings`` (a dict) collects wall-clock seconds per stage."""
    timings = {} if timings is None else timings
    acfg = replace(attack_config, seed=seed)
    tcfg = replace(train_config, seed=seed)

    graphs = {"clean": G}
    t = time.perf_counter()
    attacked, report = th_attack(G, acfg)
    timings["th_attack"] = time.perf_counter() - t
    graphs["th_attack"] = attacked
    if baseline:
        t = time.perf_counter()
        graphs["random"] = random_injection_baseline(G, acfg.eta, acfg.mu, seed)
        timings["random"] = time.perf_counter() - t
    for name in ablations:
        t = time.perf_counter()
        graphs[f"wo_{name}"], _ = th_attack(G, replace(acfg, **{ABLATIONS[name]: True}))
        timings[f"wo_{name}"] = time.perf_counter() - t

    metrics = {}
    for kind in models:
        metrics[kind] = {}
        for cond, H in graphs.items():
            t = time.perf_counter()
            params, _ = train(H, kind, tcfg)
            metrics[kind][cond] = _metrics_record(params, H)
            timings[f"train_{kind}_{cond}"] = time.perf_counter() - t

    bounds = {"th_attack": bound_summary(G, attacked, acfg.tau)}
    if baseline:
        bounds["random"] = bound_summary(G, graphs["random"], acfg.tau)
    trace = report.loss_trace
    return {
        "seed": seed,
        "attack": {
            "budget": report.budget,
            "num_candidates": report.num_candidates,
            "targets": report.targets,
            "dropped": report.dropped,
            "clipped": report.clipped,
            "mean_cosine": report.mean_cosine,
            "loss_first": trace[0] if trace else None,
            "loss_last": trace[-1] if trace else None,
        },
        "metrics": metrics,
        "bounds": bounds,
    }


def _mean_std(values):
    a = np.asarray(values, dtype=np.float64)
    return {"mean": float(a.mean()), "std": float(a.std())}


def summarize(runs) -> dict:
    """Per-model, per-condition mean/std plus clean-minus-attacked deltas."""
    summary, deltas = {}, {}
    for kind in runs[0]["metrics"]:
        conds = runs[0]["metrics"][kind]
        summary[kind] = {
            cond: {m: _mean_std([r["metrics"][kind][cond][m] for r in runs]) for m in ("accuracy", "macro_f1")}
            for cond in conds
        }
        clean = summary[kind]["clean"]
        deltas[kind] = {
            cond: {m: clean[m]["mean"] - summary[kind][cond][m]["mean"] for m in ("accuracy", "macro_f1")}
            for cond in conds if cond != "clean"
        }
        if "random" in conds:
            deltas[kind]["th_attack_vs_random"] = {
                m: summary[kind]["random"][m]["mean"] - summary[kind]["th_attack"][m]["mean"]
                for m in ("accuracy", "macro_f1")
            }
    bounds = {
        "all_hold": all(
            b["spectral_shrinkage"] and b["upper_bound_holds"] and b["single_path_exact"]
            for r in runs for b in r["bounds"].values()
        ),
        "lower_bound_counterexamples": sum(
            b["lower_bound_counterexamples"] for r in runs for b in r["bounds"].values()
        ),
    }
    return {"summary": summary, "deltas": deltas, "bounds": bounds}


def dataset_identity(G) -> dict:
    return {
        "name": G.name,
        "num_nodes": G.num_nodes,
        "num_hyperedges": G.num_hyperedges,
        "num_features": G.num_features,
        "num_classes": G.num_classes,
    }


def run_pipeline(G, seeds, attack_config: AttackConfig | None = None,
                 train_config: TrainConfig | None = None, models=MODEL_KINDS,
                 ablations=(), extra_config=None):
    """Returns ``(report, timings)``; the report is deterministic for fixed seeds."""
    attack_config = attack_config or AttackConfig()
    train_config = train_config or TrainConfig()
    seeds = [int(s) for s in seeds]
    runs, timings = [], {}
    for s in seeds:
        timings[str(s)] = {}
        runs.append(run_seed(G, s, attack_config, train_config, models, True, ablations, timings[str(s)]))
    acfg = asdict(attack_config)
    acfg.pop("seed")
    tcfg = asdict(train_config)
    tcfg.pop("seed")
    report = {
        "tool": {"name": "hyperinject", "version": __version__},
        "dataset": dataset_identity(G),
        "config": {"attack": acfg, "train": tcfg, "models": list(models), "ablations": list(ablations),
                   **({"extra": extra_config} if extra_config else {})},
        "seeds": seeds,
        "runs": runs,
        **summarize(runs),
    }
    return report, timings
