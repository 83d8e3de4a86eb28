"""Command-line entry point: ``safegrid <command> [options]``.

Exit codes: 0 ok, 1 user error (arguments, config, case files), 2 numeric
failure (power flow, non-finite learner update), 3 input/output error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig
from .env.actions import enumerate_actions
from .env.chronics import ChronicsError, read_chronics
from .env.core import UnusableEpisodeError
from .fixtures import DATA, bundled_case, write_fixtures
from .grid.case import CaseError, read_case
from .grid.powerflow import PowerFlowError, PowerFlowOptions
from .grid.snapshot import IslandingError, solve_case
from .learner import Featurizer, NumericalError, SafetySAC
from .metrics import FIELDS, ReportError, RunReport, emit_report
from .refine import AdvisorError, ReplayBuffer, RuleBasedAdvisor, refine, select_candidates
from .training import (
    episode_offsets,
    evaluate,
    make_advisor,
    make_env,
    train,
    write_config_echo,
    write_json,
)

EXIT_OK, EXIT_USER, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("safegrid")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _load_config(args) -> RunConfig:
    overrides = list(args.set or [])
    if args.config and args.config.startswith("bundled:"):
        name = args.config.split(":", 1)[1]
        try:
            text = (DATA / f"{name}.ini").read_text()
        except FileNotFoundError:
            raise ConfigError(f"no bundled config named {name}") from None
        return RunConfig.from_ini(text, overrides)
    if args.config:
        return RunConfig.read(args.config, overrides)
    return RunConfig.from_ini("", overrides)


def _out_dir(args, cfg: RunConfig) -> tuple[Path, RunConfig]:
    if getattr(args, "out", None):
        cfg = cfg.replace("run", out_dir=str(Path(args.out).resolve()))
    return Path(cfg.run.out_dir), cfg


def _summary_lines(report: RunReport) -> list[str]:
    lines = [f"episodes: {len(report.episodes)} (skipped {report.skipped})"]
    for name in FIELDS:
        lines.append(f"  {name:<20s} mean {report.mean(name):10.4f}  std {report.std(name):10.4f}")
    return lines


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out, cfg = _out_dir(args, cfg)
    write_config_echo(cfg, out)
    combined = RunReport(fingerprint=cfg.fingerprint())
    curves = {}
    summary = {"fingerprint": cfg.fingerprint(), "seeds": {}}
    for seed in cfg.run.seed_list:
        env = make_env(cfg)
        print(f"seed {seed}: training {cfg.learner.total_steps} steps "
              f"(advisor {cfg.advisor.mode}, beta {cfg.learner.beta})")
        result = train(cfg, seed, out, env=env)
        report = evaluate(cfg, result.learner, seed, env=env)
        combined.extend(report)
        curves[f"seed {seed}"] = result.curve
        summary["seeds"][str(seed)] = {
            "checkpoint": str(result.checkpoint),
            "lambda": result.learner.lam,
            "refinement": result.refinement,
            "eval": {f: report.mean(f) for f in FIELDS},
        }
        print(f"seed {seed}: mean survival {report.mean('survival_step'):.1f}, "
              f"safety cost {report.mean('safety_cost_metric'):.3f}, "
              f"refined {result.refinement['accepted']}")
    provenance = f"config {cfg.fingerprint()} seeds {cfg.run.seeds}"
    paths = emit_report(combined, out, "eval", curves=curves, provenance=provenance)
    write_json(out / "summary.json", summary)
    print("\n".join(_summary_lines(combined)))
    print(f"wrote {paths['csv']} and {paths['svg']}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    out, cfg = _out_dir(args, cfg)
    try:
        learner, extra = SafetySAC.load(args.checkpoint)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"{args.checkpoint}: not a usable checkpoint ({exc})") from None
    write_config_echo(cfg, out)
    report = evaluate(cfg, learner, learner.seed)
    rows = [(e.offset, e.cumulative_reward, e.survival_step, e.overload_rate, e.violation_rate)
            for e in report.episodes]
    provenance = f"config {cfg.fingerprint()} checkpoint {Path(args.checkpoint).name}"
    paths = emit_report(report, out, args.name, curves={"episodes": rows},
                        provenance=provenance)
    print("\n".join(_summary_lines(report)))
    print(f"wrote {paths['csv']}")
    return EXIT_OK


def cmd_refine_demo(args) -> int:
    cfg = _load_config(args)
    env = make_env(cfg)
    advisor = make_advisor(cfg, env) or RuleBasedAdvisor(env, cfg.advisor.top_lines)
    actions = enumerate_actions(env.case)
    train_offsets, _ = episode_offsets(env, cfg.run.eval_episodes)
    rng = np.random.default_rng(args.seed)
    buffer = ReplayBuffer(cfg.learner.buffer_capacity)
    # exploratory behaviour: mostly do-nothing with occasional random switching
    state = None
    for _ in range(args.steps):
        if state is None or state.terminal:
            state = env.reset(int(rng.choice(train_offsets)))
        a = 0 if rng.random() >= args.explore else int(rng.integers(len(actions)))
        tr = env.step(state, actions[a])
        buffer.push(tr)
        state = tr.s_next
    candidates = select_candidates(buffer, cfg.refine)[: args.candidates]
    print(f"buffer {len(buffer)} transitions, {len(candidates)} candidates "
          f"(r < {cfg.refine.r_thr}), advisor {type(advisor).__name__}")
    for tr in candidates:
        res = refine(tr, advisor, env, cfg.refine.K, cfg.refine)
        print(f"\n=== transition {tr.uid}: row {tr.s.t}, action {tr.a.describe()}, r = {tr.r:.4f}")
        if args.show_prompt:
            print(res.rounds[0].prompt if res.rounds else "")
        for rec in res.rounds:
            tail = rec.raw_text.strip().splitlines()[-1] if rec.raw_text.strip() else ""
            act = rec.action.describe() if rec.action is not None else "-"
            extra = f", r_hat = {rec.r_hat:.4f}" if rec.r_hat is not None else ""
            print(f"  round {rec.round}: {tail!r} -> {act}: {rec.outcome}{extra}")
        print("  refined tuple appended" if res.refined else "  original stands")
    return EXIT_OK


def cmd_pf_check(args) -> int:
    spec = args.case
    case = bundled_case(spec.split(":", 1)[1]) if spec.startswith("bundled:") else read_case(spec)
    dispatch = {}
    if args.chronics:
        chron = read_chronics(args.chronics, case)
        load_p, load_q, gen_p, gen_q = chron.row(args.row)
        dispatch = dict(load_p=load_p, load_q=load_q, gen_p=gen_p, gen_q=gen_q)
    snap = solve_case(case, None, options=PowerFlowOptions(args.tolerance, args.max_iterations),
                      **dispatch)
    sol, lim = snap.solution, snap.limits
    print(f"case {case.name}: converged={sol.converged} iterations={sol.iterations} "
          f"mismatch={sol.mismatch_norm:.3e} p.u.")
    print(f"C_v={lim.c_v:.6g} C_l={lim.c_l:.6g}")
    for bus, v in lim.violating_buses:
        print(f"  voltage violation: bus {bus} at {v:.4f} p.u.")
    for line, pct in lim.overloaded_lines:
        print(f"  overload: line {line} at {pct:.1f}%")
    for node, vm, va in zip(sol.nodes, sol.voltage_magnitude, sol.voltage_angle):
        print(f"  node {node.substation}/{node.busbar}: |V|={vm:.6f} angle={np.degrees(va):.4f} deg")
    return EXIT_OK


def cmd_gen_fixtures(args) -> int:
    paths = write_fixtures(args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="safegrid", description="Safe topology control with buffer refinement.")
    parser.add_argument("--version", action="version", version=f"safegrid {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def config_args(p):
        p.add_argument("--config", help="INI run configuration, or bundled:desk")
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override one config value (repeatable)")

    p = sub.add_parser("train", help="train Safety-SAC and evaluate each seed")
    config_args(p)
    p.add_argument("--out", help="output directory (default: run.out_dir)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy rollouts of a checkpoint on the eval episodes")
    config_args(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", help="output directory (default: run.out_dir)")
    p.add_argument("--name", default="eval_checkpoint", help="report file stem")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("refine-demo", help="print refinement traces for buffer candidates")
    config_args(p)
    p.add_argument("--steps", type=int, default=600, help="exploration steps to fill the buffer")
    p.add_argument("--explore", type=float, default=0.1, help="random action probability")
    p.add_argument("--candidates", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--show-prompt", action="store_true")
    p.set_defaults(func=cmd_refine_demo)

    p = sub.add_parser("pf-check", help="solve one snapshot and print its limit report")
    p.add_argument("--case", default="bundled:case5", help="case file or bundled:<name>")
    p.add_argument("--chronics", help="chronics CSV; solves --row instead of nominal values")
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=20)
    p.set_defaults(func=cmd_pf_check)

    p = sub.add_parser("gen-fixtures", help="write the 5-bus case, stressed chronics and config")
    p.add_argument("--out", default="fixtures")
    p.set_defaults(func=cmd_gen_fixtures)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, CaseError, ChronicsError, AdvisorError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (PowerFlowError, IslandingError, UnusableEpisodeError, NumericalError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ReportError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, IndexError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USER


if __name__ == "__main__":
    sys.exit(main())
