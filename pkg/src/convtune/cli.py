"""Command-line entry point: simulate, tune, scenario and bench subcommands.

Every command reads an optional TOML config (strict; unknown keys fatal),
applies flag overrides, and writes deterministic CSV/JSON/SVG files into
the output directory.  Exit codes: 0 success, 2 configuration error,
3 simulation divergence, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
from dataclasses import replace

from .benchmarks import FUNCTIONS
from .config import ConfigError, RunConfig, parse_config
from .loop import run_closed_loop
from .optimizers import ALGORITHMS
from .power_stage import DivergenceError
from .scenarios import BASELINE_LABEL, compare_methods
from .svgplot import line_plot
from .tuning import tune_weights

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="convtune",
        description="Simulate and tune weighted voltage-mode control of a "
                    "three-output forward DC-DC converter.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (("simulate", "run one closed loop; write trace CSV and SVG"),
                      ("tune", "search for weighting factors; write weights and history"),
                      ("scenario", "compare methods across scenarios; write report"),
                      ("bench", "validate optimizers on analytic test functions")):
        q = sub.add_parser(name, help=doc)
        q.add_argument("--config", help="TOML configuration file")
        q.add_argument("--seed", type=int, help="override the config seed")
        q.add_argument("--algo", choices=sorted(ALGORITHMS),
                       help="override the optimizer algorithm")
        q.add_argument("--scenario", help="run only this scenario name")
        q.add_argument("--out", help="output directory (default: $CONVTUNE_OUT or ./out)")
        q.add_argument("--format", help="comma-separated subset of csv,json,svg")
    return p


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg = replace(cfg, seed=args.seed)
    if args.algo:
        cfg = replace(cfg, optimizer=replace(cfg.optimizer, algo=args.algo))
    if args.scenario:
        cfg = replace(cfg, scenario_names=(args.scenario,))
        cfg.scenarios()
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    if args.format:
        formats = tuple(s.strip() for s in args.format.split(",") if s.strip())
        bad = [f for f in formats if f not in ("csv", "json", "svg")]
        if bad:
            raise ConfigError(f"unknown format {bad[0]!r}; allowed: csv, json, svg")
        cfg = replace(cfg, formats=formats)
    return cfg


def _json_dump(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_dir(cfg: RunConfig) -> str:
    d = cfg.resolve_out_dir()
    os.makedirs(d, exist_ok=True)
    return d


def cmd_simulate(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    params = cfg.plant.to_params()
    controller = cfg.controller.build()
    weights = cfg.weight_vector()
    scenarios = cfg.scenarios()
    sc = scenarios[0]
    loop = replace(cfg.loop, sim_duration=sc.duration)
    trace = run_closed_loop(params, weights, controller, list(sc.events),
                            loop, v_in=sc.v_in_initial)
    if "csv" in cfg.formats:
        trace.to_csv(os.path.join(out, "trace.csv"))
    if "svg" in cfg.formats:
        t_ms = [t * 1e3 for t in trace.t]
        series = [(f"V{i + 1} ({trace.v_ref[i]:+g} V)", list(trace.v_out[:, i]))
                  for i in range(3)]
        line_plot(os.path.join(out, "outputs.svg"), t_ms, series,
                  title=f"Output voltages: {sc.name}", x_label="t [ms]",
                  y_label="V", marks=[ev.t_event * 1e3 for ev in sc.events])
    if "json" in cfg.formats:
        _json_dump({"config": cfg.to_dict(), "scenario": sc.name,
                    "samples": len(trace)},
                   os.path.join(out, "simulate.json"))
    print(f"simulate: {sc.name}, {len(trace)} samples -> {out}")
    return EXIT_OK


def cmd_tune(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    params = cfg.plant.to_params()
    controller = cfg.controller.build()
    scenarios = cfg.scenarios()
    weights, record = tune_weights(
        cfg.optimizer.algo, scenarios, params, cfg.loop, cfg.seed,
        controller=controller, config=cfg.optimizer.build(),
        workers=cfg.optimizer.workers or None)
    if "json" in cfg.formats:
        _json_dump({"algo": cfg.optimizer.algo, "weights": list(weights.k),
                    "best_fitness": record.best_fitness,
                    "convergence_iter": record.convergence_iter,
                    "evaluations": record.evaluations,
                    "scenarios": [sc.name for sc in scenarios],
                    "config": cfg.to_dict()},
                   os.path.join(out, "weights.json"))
    if "csv" in cfg.formats:
        record.to_csv(os.path.join(out, "convergence.csv"))
    if "svg" in cfg.formats:
        line_plot(os.path.join(out, "convergence.svg"),
                  list(range(len(record.history))),
                  [("best fitness", list(record.history))],
                  title=f"{cfg.optimizer.algo} convergence", x_label="iteration",
                  y_label="total relative error")
    print(f"tune[{cfg.optimizer.algo}]: K = ({weights.k[0]:.6f}, {weights.k[1]:.6f}, "
          f"{weights.k[2]:.6f}), fitness = {record.best_fitness:.6g} -> {out}")
    return EXIT_OK


def cmd_scenario(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    params = cfg.plant.to_params()
    controller = cfg.controller.build()
    scenarios = cfg.scenarios()

    methods = []
    for label in cfg.methods:
        if label == BASELINE_LABEL:
            methods.append((label, cfg.weight_vector(), controller))
            continue
        algo_cfg = {"pso": cfg.optimizer.pso, "ica": cfg.optimizer.ica,
                    "aco": cfg.optimizer.aco}[label]
        tuner = functools.partial(_tune_one, label, algo_cfg, params, cfg, controller)
        methods.append((label, tuner, controller))
    comparison = compare_methods(methods, scenarios, params, cfg.loop)

    if "csv" in cfg.formats:
        comparison.regulation_csv(os.path.join(out, "regulation.csv"))
        comparison.convergence_csv(os.path.join(out, "convergence.csv"))
    if "json" in cfg.formats:
        obj = comparison.to_json_obj()
        obj["config"] = cfg.to_dict()
        _json_dump(obj, os.path.join(out, "report.json"))
    for flag in comparison.flags:
        print(f"flag: {flag}")
    print(f"scenario: {len(comparison.reports)} method x scenario rows -> {out}")
    return EXIT_OK


def _tune_one(label, algo_cfg, params, cfg, controller, scenario):
    return tune_weights(label, [scenario], params, cfg.loop, cfg.seed,
                        controller=controller, config=algo_cfg,
                        workers=cfg.optimizer.workers or None)


def cmd_bench(cfg: RunConfig) -> int:
    out = _out_dir(cfg)
    rows = []
    for fname in cfg.bench_functions:
        func, space, optimum = FUNCTIONS[fname]
        for algo in sorted(ALGORITHMS):
            cfg_cls, runner = ALGORITHMS[algo]
            algo_cfg = replace({"pso": cfg.optimizer.pso, "ica": cfg.optimizer.ica,
                                "aco": cfg.optimizer.aco}[algo], seed=cfg.seed)
            res = runner(space, algo_cfg, func)
            err = max(abs(p - o) for p, o in zip(res.best_position, optimum))
            rows.append({"function": fname, "algo": algo,
                         "best_fitness": res.best_fitness,
                         "best_position": list(res.best_position),
                         "position_error": err,
                         "convergence_iter": res.convergence_iter,
                         "evaluations": res.evaluations})
    if "csv" in cfg.formats:
        with open(os.path.join(out, "bench.csv"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("function,algo,best_fitness,position_error,convergence_iter,"
                     "evaluations\n")
            for r in rows:
                fh.write(f"{r['function']},{r['algo']},{r['best_fitness']:.9g},"
                         f"{r['position_error']:.9g},{r['convergence_iter']},"
                         f"{r['evaluations']}\n")
    if "json" in cfg.formats:
        _json_dump({"results": rows, "config": cfg.to_dict()},
                   os.path.join(out, "bench.json"))
    for r in rows:
        print(f"bench {r['function']:>10s} / {r['algo']}: best = "
              f"{r['best_fitness']:.3e}, |x - x*| = {r['position_error']:.4f}")
    return EXIT_OK


_COMMANDS = {"simulate": cmd_simulate, "tune": cmd_tune,
             "scenario": cmd_scenario, "bench": cmd_bench}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config) if args.config else RunConfig()
        cfg = _apply_overrides(cfg, args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
