"""Command-line front end: ``generate``, ``baseline``, ``train``, ``evaluate``.

Exit codes: 0 success, 1 dataset/IO/runtime failure, 2 invalid arguments
(including a missing checkpoint). Every output is a deterministic function
of the arguments and input files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import plots
from .baseline import noop_policy, random_policy, rbc_policy
from .config import ConfigError, RunConfig, load_run_config
from .data import DataError, generate_synthetic, load_dataset, save_dataset
from .env import ActionLayout, run_episode
from .metrics import COMPONENTS, MetricError, score, write_score_table
from .sac import LayoutMismatch, SacAgent, deploy, greedy_trace, train

log = logging.getLogger("district_dsm")

LOG_HEADER = ["episode", "reward_sum", "ramping_ratio", "lf_ratio", "adp_ratio", "peak_ratio", "net_ratio", "avg_score"]
CHECKPOINT_DIR = "checkpoint"
PROGRESS_NAME = "progress.json"


class UsageError(Exception):
    """Bad or missing arguments detected after parsing (exit 2)."""


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _non_negative_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def _add_globals(p, default):
    p.add_argument("--config", type=Path, default=default, help="run config TOML")
    p.add_argument("--seed", type=_non_negative_int, default=default, help="random seed")
    p.add_argument("--out", type=Path, default=default, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true", default=default)


def build_parser():
    parser = argparse.ArgumentParser(prog="district-dsm", description="District demand-side management workbench")
    _add_globals(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset directory")
    _add_globals(g, argparse.SUPPRESS)
    g.add_argument("--buildings", type=_positive_int, required=True)
    g.add_argument("--days", type=_positive_int, required=True)
    g.add_argument("--climate", choices=["1", "2", "3", "4"], default="1")
    g.add_argument("--start-month", type=int, choices=range(1, 13), default=1, metavar="1-12")
    g.add_argument("--t-out-shift", type=float, default=0.0, help="add a constant to outdoor temperature (degC)")

    b = sub.add_parser("baseline", help="simulate no-op, RBC and optional random controllers")
    _add_globals(b, argparse.SUPPRESS)
    b.add_argument("--data", type=Path)
    b.add_argument("--random", action="store_true", help="also simulate a uniform random controller")

    t = sub.add_parser("train", help="train a SAC agent on one dataset")
    _add_globals(t, argparse.SUPPRESS)
    t.add_argument("--data", type=Path)
    t.add_argument("--episodes", type=_non_negative_int)
    t.add_argument("--resume", action="store_true", help="continue from OUT/checkpoint if present")

    e = sub.add_parser("evaluate", help="deploy a trained agent on one or more datasets")
    _add_globals(e, argparse.SUPPRESS)
    e.add_argument("--checkpoint", type=Path)
    e.add_argument("--data", type=Path, nargs="+")
    e.add_argument("--labels", nargs="+", help="row labels, one per dataset")
    e.add_argument("--episodes", type=_positive_int, default=1)
    e.add_argument("--rbc", action="store_true", help="score the RBC itself instead of an agent")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _run_config(args):
    return load_run_config(args.config) if args.config else RunConfig()


def _seed(args, cfg, required=True):
    seed = args.seed if args.seed is not None else cfg.seed
    if seed is None and required:
        raise UsageError("a seed is required (--seed or 'seed' in the config)")
    return seed


def _out(args, cfg):
    out = args.out or cfg.out
    if out is None:
        raise UsageError("an output directory is required (--out or 'out' in the config)")
    return Path(out)


def _data(args, cfg, many=False):
    paths = args.data if args.data else cfg.data
    if isinstance(paths, Path):
        paths = [paths]
    if not paths:
        raise UsageError("a dataset is required (--data or 'data' in the config)")
    return list(paths) if many else Path(paths[0])


def _fmt(v):
    return repr(float(v))


def _write_rows(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args):
    cfg = _run_config(args)
    seed = _seed(args, cfg)
    out = _out(args, cfg)
    ds = generate_synthetic(
        args.buildings, args.days, seed, climate=args.climate, start_month=args.start_month, t_out_shift=args.t_out_shift
    )
    save_dataset(ds, out)
    print(f"wrote {len(ds.buildings)} buildings x {ds.hours} h to {out}")
    return 0


def cmd_baseline(args):
    cfg = _run_config(args)
    seed = _seed(args, cfg, required=args.random)
    out = _out(args, cfg)
    ds = load_dataset(_data(args, cfg))
    layout = ActionLayout.from_dataset(ds)
    out.mkdir(parents=True, exist_ok=True)

    rbc = run_episode(ds, rbc_policy(layout, cfg.rbc), cfg.env)
    rbc.write_csv(out / "trace.csv")
    traces = [("rbc", rbc), ("noop", run_episode(ds, noop_policy(layout), cfg.env))]
    if args.random:
        traces.append(("random", run_episode(ds, random_policy(layout, seed), cfg.env)))
    rows = []
    for name, tr in traces[1:]:
        tr.write_csv(out / f"{name}_trace.csv")
    for name, tr in traces:
        rows.append((name, score(tr.e_total, rbc.e_total, ds.month_blocks)))
    write_score_table(out / "report.csv", rows, average_row=False)
    for name, r in rows:
        print(f"{name:>7s}  avg_score {r.avg_score:.4f}")
    return 0


def _log_row(episode, result_reward, report):
    return [str(episode), _fmt(result_reward)] + [_fmt(report.ratios[k]) for k in COMPONENTS] + [_fmt(report.avg_score)]


def _week_window(trace, hours=168):
    if len(trace) <= hours:
        return 0, len(trace)
    start = min((int(np.argmax(trace)) // hours) * hours, len(trace) - hours)
    return start, start + hours


def _write_plots(out, rows, agent, ds, cfg):
    eps = [int(r[0]) for r in rows]
    plots.line_chart(
        out / "reward_curve.svg",
        [("SAC", eps, [float(r[1]) for r in rows])],
        title="Episode reward",
        xlabel="episode",
        ylabel="sum of rewards",
    )
    plots.line_chart(
        out / "cost_curve.svg",
        [("SAC", eps, [float(r[-1]) for r in rows])],
        title="Episode cost (RBC = 1)",
        xlabel="episode",
        ylabel="average score",
        hline=1.0,
    )
    layout = ActionLayout.from_dataset(ds)
    noop = run_episode(ds, noop_policy(layout), cfg.env).e_total
    rbc = run_episode(ds, rbc_policy(layout, cfg.rbc), cfg.env).e_total
    sac = greedy_trace(agent, ds, cfg.env).e_total
    lo, hi = _week_window(noop)
    hours = np.arange(lo, hi)
    plots.line_chart(
        out / "profile.svg",
        [("no storage use", hours, noop[lo:hi]), ("RBC", hours, rbc[lo:hi]), ("SAC", hours, sac[lo:hi])],
        title="District net consumption",
        xlabel="hour of episode",
        ylabel="kWh",
    )


def _read_log(path, keep):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    if len(rows) < keep:
        raise DataError(f"{path} has {len(rows)} rows but the checkpoint records {keep} episodes")
    return rows[:keep]


def cmd_train(args):
    cfg = _run_config(args)
    seed = _seed(args, cfg)
    out = _out(args, cfg)
    episodes = args.episodes if args.episodes is not None else cfg.episodes
    if episodes is None:
        raise UsageError("an episode count is required (--episodes or 'episodes' in the config)")
    ds = load_dataset(_data(args, cfg))
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / CHECKPOINT_DIR
    log_path = out / "log.csv"

    agent, rows = None, []
    if args.resume and (ckpt / PROGRESS_NAME).is_file():
        done = json.loads((ckpt / PROGRESS_NAME).read_text())["episodes_done"]
        agent = SacAgent.load(ckpt)
        rows = _read_log(log_path, done)
        log.info("resuming after episode %d", done)
    _write_rows(log_path, LOG_HEADER, rows)

    def on_episode(_, agent, result):
        row = _log_row(len(rows) + 1, result.reward_sum, result.report)
        rows.append(row)
        agent.save(ckpt)
        (ckpt / PROGRESS_NAME).write_text(json.dumps({"episodes_done": len(rows)}) + "\n")
        with log_path.open("a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(row)
        print(f"episode {row[0]}: reward {result.reward_sum:.2f}  avg_score {result.report.avg_score:.4f}", flush=True)

    remaining = max(episodes - len(rows), 0)
    res = train(
        ds,
        env_config=cfg.env,
        sac_config=cfg.sac,
        episodes=remaining,
        seed=seed,
        reward_config=cfg.reward,
        schedule=cfg.rbc,
        agent=agent,
        on_episode=on_episode,
    )
    if not (ckpt / PROGRESS_NAME).is_file():
        res.agent.save(ckpt)
        (ckpt / PROGRESS_NAME).write_text(json.dumps({"episodes_done": 0}) + "\n")
    if rows:
        _write_plots(out, rows, res.agent, ds, cfg)
    return 0


def cmd_evaluate(args):
    cfg = _run_config(args)
    out = _out(args, cfg)
    paths = _data(args, cfg, many=True)
    if args.labels and len(args.labels) != len(paths):
        raise UsageError(f"--labels has {len(args.labels)} entries for {len(paths)} datasets")
    agent = None
    if not args.rbc:
        seed = _seed(args, cfg)
        if args.checkpoint is None:
            raise UsageError("--checkpoint is required unless --rbc is given")
        if not (args.checkpoint / "agent.json").is_file():
            raise UsageError(f"no checkpoint found at {args.checkpoint}")
        agent = SacAgent.load(args.checkpoint)

    rows, failures = [], 0
    for i, path in enumerate(paths):
        try:
            ds = load_dataset(path)
            label = args.labels[i] if args.labels else ds.climate_zone_label
            if agent is None:
                layout = ActionLayout.from_dataset(ds)
                base = run_episode(ds, rbc_policy(layout, cfg.rbc), cfg.env).e_total
                report = score(base, base, ds.month_blocks)
            else:
                _, reports = deploy(
                    agent,
                    ds,
                    env_config=cfg.env,
                    eval_config=cfg.sac_eval,
                    episodes=args.episodes,
                    seed=seed,
                    reward_config=cfg.reward,
                    schedule=cfg.rbc,
                )
                report = reports[-1]
        except (LayoutMismatch, DataError, MetricError) as exc:
            failures += 1
            print(f"error: {path}: {exc}", file=sys.stderr)
            continue
        rows.append((label, report))
        print(f"{label:>10s}  avg_score {report.avg_score:.4f}", flush=True)
    if not rows:
        print("error: no dataset could be evaluated", file=sys.stderr)
        return 1
    out.mkdir(parents=True, exist_ok=True)
    write_score_table(out / "scores.csv", rows)
    return 0


COMMANDS = {"generate": cmd_generate, "baseline": cmd_baseline, "train": cmd_train, "evaluate": cmd_evaluate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, MetricError, LayoutMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
