#!/usr/bin/env python3
"""
mindblend CLI — offline news-recommendation ensembles on MIND-format logs.

Subcommands:
    init      copy the default mindblend.yaml into an experiment directory
    fixture   write a synthetic dataset with planted content and cohort signals
    validate  cross-check behaviors against the news catalog
    score     score every impression with one learner
    combine   fuse member score files into a prediction file
    evaluate  AUC / MRR / nDCG@5 / nDCG@10 of a prediction or score file
    sweep     grid-search fusion weights on a dev set
    run       score all learners, fuse, and print the comparison table

Exit codes: 0 ok, 1 data or file error, 2 usage or config error.
"""

import argparse
import shutil
import sys
from pathlib import Path
from typing import Callable, Optional

from exceptions import ConfigError, DataError, FileError, MindBlendError, UsageError
from logger import configure_logging, get_logger
from mindblend.config import RunConfig, get_config, load_fusion
from mindblend.ensemble import FusionSpec, Transform
from mindblend.metrics import Metric

logger = get_logger("cli")

# ─── COLORS ───────────────────────────────────────────────────────────────────

GREEN = "\033[0;32m"
BLUE = "\033[0;34m"
YELLOW = "\033[1;33m"
RED = "\033[0;31m"
NC = "\033[0m"


def ok(msg: str) -> None:
    print(f"{GREEN}✅ {msg}{NC}")


def info(msg: str) -> None:
    print(f"{BLUE}→  {msg}{NC}")


def warn(msg: str) -> None:
    print(f"{YELLOW}⚠  {msg}{NC}")


def err(msg: str) -> None:
    print(f"{RED}❌ {msg}{NC}", file=sys.stderr)


# ─── SHARED HELPERS ───────────────────────────────────────────────────────────


def _load(args: argparse.Namespace) -> RunConfig:
    """Run config with command-line overrides applied and logging configured."""
    cfg = get_config(getattr(args, "config", None))
    out = getattr(args, "out", None)
    cfg = cfg.with_overrides(
        seed=getattr(args, "seed", None),
        output_dir=Path(out).resolve() if out else None,
        workers=getattr(args, "workers", None),
    )
    configure_logging(getattr(args, "log_level", None) or cfg.log_level, cfg.log_json)
    return cfg


def _split(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _parse_weights(text: str) -> list[float]:
    try:
        return [float(w) for w in _split(text)]
    except ValueError as exc:
        raise UsageError(f"Invalid --weights {text!r}", context={"expected": "w1,w2,..."}) from exc


def _metric_arg(text: str) -> Metric:
    try:
        return Metric.parse(text)
    except UsageError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fusion_from_args(args: argparse.Namespace, cfg: RunConfig) -> FusionSpec:
    """--fusion file, else the config's fusion; --members/--weights/--transform override."""
    base: Optional[FusionSpec] = load_fusion(args.fusion) if args.fusion else cfg.fusion
    names = _split(args.members) if args.members else list(base.names if base else [])
    if not names:
        raise UsageError("No fusion members given (use --members or a fusion section)")
    transform = Transform(args.transform) if args.transform else (
        base.transform if base else Transform.RECIPROCAL_RANK
    )
    if args.weights:
        weights: Optional[list[float]] = _parse_weights(args.weights)
    elif base is not None and list(base.names) == names:
        weights = list(base.weights)
    else:
        weights = None
    return FusionSpec.create(names, weights, transform)


# ─── INIT ─────────────────────────────────────────────────────────────────────


def cmd_init(args: argparse.Namespace) -> None:
    """
    Write mindblend.yaml into the target directory.

    Copies the bundled default config. If mindblend.yaml already exists,
    aborts unless --force is passed.
    """
    target_dir = Path(args.path) if args.path else Path.cwd()
    target = target_dir / "mindblend.yaml"
    default_config = Path(__file__).parent / "mindblend" / "defaults" / "mindblend.yaml"

    if not default_config.exists():
        raise FileError(f"Bundled default config not found: {default_config}")
    if target.exists() and not args.force:
        raise UsageError(f"{target} already exists", context={"hint": "use --force to overwrite"})

    target_dir.mkdir(parents=True, exist_ok=True)
    shutil.copy(default_config, target)
    ok(f"Created {target}")
    info("Edit paths and learners, then run: mindblend run")


# ─── FIXTURE ──────────────────────────────────────────────────────────────────


def cmd_fixture(args: argparse.Namespace) -> None:
    from mindblend.fixture import FixtureSizes, generate_fixture, write_fixture

    cfg = _load(args)
    out_dir = Path(args.out) if args.out else Path.cwd()
    sizes = FixtureSizes(
        users=args.users,
        articles=args.articles,
        impressions=args.impressions,
        candidates=args.candidates,
        cohorts=args.cohorts,
    )
    fixture = generate_fixture(sizes, cfg.seed)
    for path in write_fixture(fixture, out_dir, seed=cfg.seed):
        ok(f"Wrote {path}")


# ─── VALIDATE ─────────────────────────────────────────────────────────────────


def cmd_validate(args: argparse.Namespace) -> None:
    from mindblend.dataset import parse_behaviors, parse_news, validate
    from mindblend.issues import Severity

    cfg = _load(args)
    if cfg.paths.news is None or cfg.paths.behaviors is None:
        raise UsageError("Config needs paths.news and paths.behaviors")
    cfg.check_paths()
    report = validate(parse_news(cfg.paths.news), parse_behaviors(cfg.paths.behaviors))

    shown = report.issues[: args.limit] if args.limit else report.issues
    for issue in shown:
        if issue.severity == Severity.ERROR:
            print(f"{RED}{issue}{NC}")
        else:
            print(f"{YELLOW}{issue}{NC}")
    if len(shown) < len(report.issues):
        info(f"... {len(report.issues) - len(shown)} more issue(s)")
    print()
    if report.is_clean:
        ok(report.summary())
    else:
        warn(report.summary())


# ─── SCORE ────────────────────────────────────────────────────────────────────


def cmd_score(args: argparse.Namespace) -> None:
    from mindblend.pipeline import Experiment

    cfg = _load(args)
    cfg.learner(args.learner)
    result = Experiment(cfg).score(args.learner)
    print(result.report.to_text(), end="")
    if result.report.substitutions:
        warn(f"{sum(result.report.substitutions.values())} substitution(s); see log for details")
    ok(f"Wrote {result.path}")


# ─── COMBINE ──────────────────────────────────────────────────────────────────


def cmd_combine(args: argparse.Namespace) -> None:
    from mindblend.pipeline import Experiment

    cfg = _load(args)
    spec = _fusion_from_args(args, cfg)
    members = ", ".join(f"{m.name}={m.weight:g}" for m in spec.members)
    info(f"Fusing {members} ({spec.transform.value})")
    result = Experiment(cfg).combine(spec)
    ok(f"Wrote {result.path}")


# ─── EVALUATE ─────────────────────────────────────────────────────────────────


def cmd_evaluate(args: argparse.Namespace) -> None:
    from mindblend.pipeline import PREDICTION_FILE, Experiment

    cfg = _load(args)
    if args.input:
        source = Path(args.input)
    elif args.learner:
        cfg.learner(args.learner)
        source = cfg.score_path(args.learner)
    else:
        source = cfg.output_dir / PREDICTION_FILE
    result = Experiment(cfg).evaluate(source)
    print(result.report.to_text(title=source.name), end="")
    for path in result.paths:
        ok(f"Wrote {path}")


# ─── SWEEP ────────────────────────────────────────────────────────────────────


def cmd_sweep(args: argparse.Namespace) -> None:
    from mindblend.pipeline import Experiment

    cfg = _load(args)
    if args.members:
        members = _split(args.members)
    elif cfg.fusion is not None:
        members = list(cfg.fusion.names)
    else:
        members = []
    transform = Transform(args.transform) if args.transform else None
    result = Experiment(cfg).sweep(
        members, objective=args.objective, step=args.step, transform=transform
    )
    print(result.to_text(), end="")
    ok(f"Best spec written to {cfg.output_dir / 'fusion.yaml'}")
    info(f"Reuse with: mindblend combine --fusion {cfg.output_dir / 'fusion.yaml'}")


# ─── RUN ──────────────────────────────────────────────────────────────────────


def cmd_run(args: argparse.Namespace) -> None:
    from mindblend.pipeline import Experiment

    cfg = _load(args)
    cfg.check_paths()
    result = Experiment(cfg).run()
    print(result.to_text(), end="")
    for path in result.paths:
        ok(f"Wrote {path}")


# ─── ENTRY POINT ──────────────────────────────────────────────────────────────


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Run config (default: search order)")
    common.add_argument("--seed", type=int, help="Override the run seed")
    common.add_argument("--out", "-o", help="Output directory")
    common.add_argument("--workers", type=int, help="Thread pool size")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="mindblend")
    sub = parser.add_subparsers(dest="command", required=True)

    init = sub.add_parser("init", help="Write mindblend.yaml for a new experiment")
    init.add_argument("--path", "-p", help="Target directory (default: CWD)")
    init.add_argument("--force", "-f", action="store_true", help="Overwrite existing file")
    init.set_defaults(handler=cmd_init)

    fix = sub.add_parser("fixture", parents=[common], help="Write a synthetic dataset")
    fix.add_argument("--users", type=int, default=10)
    fix.add_argument("--articles", type=int, default=20)
    fix.add_argument("--impressions", type=int, default=50)
    fix.add_argument("--candidates", type=int, default=8, help="Candidates per impression")
    fix.add_argument("--cohorts", type=int, default=3, help="Collaborative user cohorts")
    fix.set_defaults(handler=cmd_fixture)

    val = sub.add_parser("validate", parents=[common], help="Check dataset consistency")
    val.add_argument("--limit", type=int, default=50, help="Issues to print (0 = all)")
    val.set_defaults(handler=cmd_validate)

    sco = sub.add_parser("score", parents=[common], help="Score impressions with a learner")
    sco.add_argument("--learner", "-l", required=True, help="Configured learner name")
    sco.set_defaults(handler=cmd_score)

    com = sub.add_parser("combine", parents=[common], help="Fuse member score files")
    com.add_argument("--members", help="Comma-separated learner names")
    com.add_argument("--weights", help="Comma-separated weights, one per member")
    com.add_argument("--transform", choices=[t.value for t in Transform])
    com.add_argument("--fusion", help="Fusion spec written by sweep")
    com.set_defaults(handler=cmd_combine)

    eva = sub.add_parser("evaluate", parents=[common], help="Compute ranking metrics")
    source = eva.add_mutually_exclusive_group()
    source.add_argument("--input", "-i", help="Prediction file or score file")
    source.add_argument("--learner", "-l", help="Evaluate this learner's score file")
    eva.set_defaults(handler=cmd_evaluate)

    swp = sub.add_parser("sweep", parents=[common], help="Grid-search fusion weights")
    swp.add_argument("--members", help="Comma-separated learner names (>= 2)")
    swp.add_argument("--objective", type=_metric_arg, help="auc | mrr | ndcg5 | ndcg10")
    swp.add_argument("--step", type=float, help="Grid step dividing 1 (default 0.1)")
    swp.add_argument("--transform", choices=[t.value for t in Transform])
    swp.set_defaults(handler=cmd_sweep)

    run = sub.add_parser("run", parents=[common], help="Score, fuse and compare everything")
    run.set_defaults(handler=cmd_run)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[argparse.Namespace], None] = args.handler
    try:
        handler(args)
    except (UsageError, ConfigError) as exc:
        err(str(exc))
        return 2
    except (DataError, FileError) as exc:
        err(str(exc))
        return 1
    except MindBlendError as exc:
        logger.exception("Unexpected error")
        err(str(exc))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
