"""Command-line entry point.

One JSON config describes a run; dotted ``--set`` overrides tweak it
without editing the file. Verbs: ``simulate`` (synthetic world, simulated
or oracle judge), ``optimize`` (live judges), ``compare`` (sampler
benchmark over paired seeds), ``report`` (regenerate trace artifacts from a
finished run's duel log), ``serve`` (HTTP session for the judge UI), and
``validate-config``.

Exit codes: 0 success, 1 config/input error, 2 runtime error (an aborted
optimize run writes ``snapshot.json`` before exiting).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import evaluation
from .config import ConfigError, apply_override, load_config_file, normalize_config, validate_config
from .engine import Engine, EngineAborted, EngineError, save_snapshot, write_duel_log
from .records import Pool


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duelopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool = True):
        p.add_argument("--config", required=config_required, help="run config JSON ('-' for stdin)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override (repeatable)")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--rounds", type=int, default=None, help="override the round budget")
        p.add_argument("--out", default=None, help="directory for run artifacts")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("simulate", help="run against a synthetic world")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="run against live judges")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", help="benchmark samplers over paired seeds")
    common(p)
    p.add_argument("--samplers", default="dts_copeland,dts_borda,rucb,random",
                   help="comma-separated sampler kinds")
    p.add_argument("--n-seeds", type=int, default=5, help="seeds per sampler")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="regenerate trace CSV/JSON from a finished run")
    common(p, config_required=False)
    p.add_argument("--run", required=True, help="artifact directory of the finished run")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="expose a session over HTTP")
    common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate-config", help="schema-check a config and exit")
    common(p)
    p.set_defaults(func=cmd_validate)

    return parser


def _load(args) -> dict:
    doc = load_config_file(args.config)
    for assignment in args.set:
        doc = apply_override(doc, assignment)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.rounds is not None:
        doc["rounds"] = args.rounds
    return doc


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _write_run_artifacts(result, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_duel_log(result.duel_log, os.path.join(out_dir, "duel_log.csv"))
    evaluation.write_trace_csv(result.trace, os.path.join(out_dir, "trace.csv"))
    with open(os.path.join(out_dir, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(result.result_document(), fh, indent=2, default=evaluation._json_default)


def _finish_run(args, result) -> int:
    if args.out:
        _write_run_artifacts(result, args.out)
    stopped = "stopped early" if result.stopped_early else "used full budget"
    _say(args, f"best arm: {result.final_best.arm_id} after {result.rounds_completed} rounds ({stopped})")
    _say(args, f"judge calls: {result.cost.judge_calls}, mutation calls: {result.cost.mutation_calls}")
    if args.out:
        _say(args, f"artifacts written to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    doc = _load(args)
    judge_type = doc.get("judge", {}).get("type", "simulated")
    if judge_type not in ("simulated", "oracle"):
        raise ConfigError(
            f"judge.type: simulate needs a simulated or oracle judge, got {judge_type!r} "
            "(use the optimize verb for live judges)"
        )
    return _finish_run(args, Engine(doc).run())


def cmd_optimize(args) -> int:
    doc = _load(args)
    if doc.get("judge", {}).get("type") == "human":
        raise ConfigError("judge.type: human-judged runs go through the serve verb")
    try:
        return _finish_run(args, Engine(doc).run())
    except EngineAborted as exc:
        out_dir = args.out or "."
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "snapshot.json")
        save_snapshot(exc.snapshot, path)
        print(f"run aborted: {exc}; resumable snapshot written to {path}", file=sys.stderr)
        return 2


def cmd_compare(args) -> int:
    doc = _load(args)
    kinds = [k.strip() for k in args.samplers.split(",") if k.strip()]
    if not kinds:
        raise ConfigError("--samplers: need at least one sampler kind")
    if args.n_seeds < 1:
        raise ConfigError("--n-seeds: must be >= 1")
    report = evaluation.compare_samplers(doc, kinds, args.n_seeds)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report.write_csv(os.path.join(args.out, "compare.csv"))
        report.write_json(os.path.join(args.out, "compare.json"))
        _say(args, f"comparison written to {args.out}")
    for kind in kinds:
        rounds = report.summary[kind]
        last = rounds[max(rounds)] if rounds else {}
        r_t = last.get("r_t", {}).get("mean")
        tail = f"final-round mean regret {r_t:.4f}" if r_t is not None else "no ground truth"
        _say(args, f"{kind}: {tail}")
    return 0


def cmd_report(args) -> int:
    result_path = os.path.join(args.run, "result.json")
    log_path = os.path.join(args.run, "duel_log.csv")
    for path in (result_path, log_path):
        if not os.path.exists(path):
            raise ConfigError(f"--run: missing artifact {path}")
    with open(result_path, "r", encoding="utf-8") as fh:
        result_doc = json.load(fh)
    config = result_doc["config"]
    pool = Pool.from_dict(result_doc["pool"])
    rows = evaluation.read_duel_log(log_path)
    trace = evaluation.replay_trace(config, pool, rows)
    out_dir = args.out or args.run
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace_replay.csv")
    evaluation.write_trace_csv(trace, trace_path)
    with open(os.path.join(out_dir, "replay.json"), "w", encoding="utf-8") as fh:
        json.dump({"config": config, "trace": trace}, fh, indent=2, default=evaluation._json_default)
    original = os.path.join(args.run, "trace.csv")
    if os.path.exists(original):
        with open(original, "rb") as fh_a, open(trace_path, "rb") as fh_b:
            if fh_a.read() != fh_b.read():
                print("replayed trace differs from the run's own export", file=sys.stderr)
                return 2
        _say(args, "replayed trace matches the run's export")
    _say(args, f"report written to {out_dir}")
    return 0


def cmd_serve(args) -> int:
    from .serve import run_server

    doc = _load(args)
    run_server(doc)
    return 0


def cmd_validate(args) -> int:
    doc = _load(args)
    validate_config(doc)
    normalize_config(doc)
    _say(args, "config ok")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"config error: invalid JSON ({exc})", file=sys.stderr)
        return 1
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
