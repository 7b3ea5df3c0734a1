"""Command-line interface: ``riflex <command> --config <path> [flags]``.

Exit codes: 0 ok, 1 usage, 2 config, 3 data, 4 verification failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

import jsonschema

from . import serialize
from .aliasing import AliasScanParams, compare_reports, strategy_report
from .config import ToolConfig, call_to_dict, load_config, strategy_call
from .diagnostics import DIAGNOSTICS_COLUMNS, check_non_repetition, diagnostics_table, identify_intrinsic, period
from .errors import ConfigError, FrameDataError, NoRepetitionFoundError, RiflexError
from .frames import load_video
from .norepeat import NORMALIZE_MODES, NoRepeatConfig, aggregate, norepeat_score
from .rope import FrequencySpec
from .strategies import STRATEGY_NAMES, StrategyResult, riflex_base_form

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
    p.add_argument("--config", required=config_required, help="config file or bundled preset name")
    p.add_argument("--print-effective-config", action="store_true", help="print the validated config with defaults and exit")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--axis", help="axis to operate on (default: simulation.axis or the first axis)")


def _add_strategy_flags(p: argparse.ArgumentParser, multiple: bool = False) -> None:
    if multiple:
        p.add_argument("--strategy", action="append", choices=STRATEGY_NAMES, help="may be repeated")
    else:
        p.add_argument("--strategy", choices=STRATEGY_NAMES)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--scale", type=float, help="extrapolation factor s")
    g.add_argument("--target-len", type=int, help="target length L'")
    p.add_argument("--k", type=int, help="intrinsic component index (1-based)")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--total-timesteps", type=int)
    p.add_argument("--switch-timestep", type=int)
    p.add_argument("--timestep", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="riflex", description="RoPE length-extrapolation toolkit")
    parser.add_argument("--threads", type=int, help="worker threads for similarity matrices (env RIFLEX_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("freqs", help="per-component period / repeat count table")
    _add_common(p)
    p.add_argument("--train-len", type=int, help="override the axis training length")

    p = sub.add_parser("strategy", help="apply an extrapolation strategy to one axis")
    _add_common(p)
    _add_strategy_flags(p)

    p = sub.add_parser("intrinsic", help="identify the intrinsic component from an observed repetition")
    _add_common(p)
    p.add_argument("--observed-n", type=int, required=True)

    p = sub.add_parser("simulate", help="encoding-level aliasing and motion report")
    _add_common(p)
    _add_strategy_flags(p, multiple=True)
    p.add_argument("--compare", action="store_true", help="emit two reports and their delta")
    p.add_argument("--positions", type=int, help="positions P (default ceil(L*s))")
    p.add_argument("--alias-threshold", type=float)
    p.add_argument("--min-separation", type=int)
    p.add_argument("--subset", help="comma-separated component indices for an extra scan")
    p.add_argument("--svg", help="write a heatmap of the full-spectrum matrix")
    p.add_argument("--matrix-csv", help="write the full-spectrum matrix as CSV")
    p.add_argument("--include-matrix", action="store_true", help="embed the matrix in the JSON report")

    p = sub.add_parser("norepeat", help="NoRepeat score over frame sequences")
    _add_common(p, config_required=False)
    p.add_argument("videos", nargs="+", help="frame directories (PGM/PPM) or RFLX1 files")
    p.add_argument("--expected-period", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--normalize", choices=NORMALIZE_MODES)
    p.add_argument("--reports-dir", help="also write one JSON report per video here")

    p = sub.add_parser("verify", help="check the non-repetition condition; exit 4 if violated")
    _add_common(p)
    _add_strategy_flags(p)
    p.add_argument("--from-result", help="strategy JSON emitted by the 'strategy' command")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("RIFLEX_THREADS")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise UsageError(f"RIFLEX_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _axis(args, cfg: ToolConfig) -> str:
    axis = args.axis or cfg.sim_axis()
    try:
        cfg.model.axis(axis)
    except RiflexError as exc:
        raise UsageError(str(exc)) from None
    return axis


def _call_for(args, cfg: ToolConfig, axis: str, name: Optional[str] = None):
    block = {}
    base = cfg.strategies.get(axis)
    if base is not None:
        block = call_to_dict(base)
    if name is not None or args.strategy:
        block["name"] = name or args.strategy
    if "name" not in block:
        raise UsageError("no strategy given (use --strategy or a strategies block in the config)")
    if args.scale is not None:
        block.pop("target_len", None)
        block["scale"] = args.scale
    if args.target_len is not None:
        block.pop("scale", None)
        block["target_len"] = args.target_len
    for key in ("k", "alpha", "beta", "total_timesteps", "switch_timestep", "timestep"):
        value = getattr(args, key)
        if value is not None:
            block[key] = value
    try:
        return strategy_call(block, cfg.model.axis(axis), cfg.intrinsic.get(axis))
    except ConfigError as exc:
        raise UsageError(str(exc)) from None
    except (RiflexError, ValueError) as exc:
        raise UsageError(f"strategy {block['name']}: {exc}") from None


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _strategy_dict(axis: str, call, result: StrategyResult, equivalent_base=None) -> dict:
    return {
        "axis": axis,
        "strategy_name": result.strategy_name,
        "d_prime": result.d_prime,
        "train_len": call.params.train_len,
        "scale": call.params.scale,
        "target_len": call.params.target_len,
        "k": call.k,
        "thetas_old": list(result.thetas_old),
        "thetas_new": list(result.thetas_new),
        "modified_indices": sorted(result.modified_indices),
        "base_new": result.base_new,
        "equivalent_base": equivalent_base,
        "noop": result.noop,
        "branch": result.branch,
        "notes": list(result.notes),
    }


def cmd_freqs(args, cfg: ToolConfig) -> int:
    axis = _axis(args, cfg)
    ax = cfg.model.axis(axis)
    train_len = args.train_len or ax.train_len
    rows = diagnostics_table(ax.spec, train_len)
    if args.format == "csv":
        text = serialize.csv_text(DIAGNOSTICS_COLUMNS, ([getattr(r, c) for c in DIAGNOSTICS_COLUMNS] for r in rows))
    else:
        text = serialize.dumps({"axis": axis, "train_len": train_len, "rows": [r.to_dict() for r in rows]})
    _emit(args, text)
    return EXIT_OK


def cmd_strategy(args, cfg: ToolConfig) -> int:
    axis = _axis(args, cfg)
    call = _call_for(args, cfg, axis)
    spec = cfg.model.axis(axis).spec
    try:
        result = call.run(spec)
        equivalent_base = riflex_base_form(spec, call.params, call.k)[0] if call.name in ("riflex-base", "riflex-all-low") else None
    except RiflexError as exc:
        raise UsageError(f"strategy {call.name}: {exc}") from None
    if args.format == "csv":
        text = serialize.csv_text(
            ("j", "theta_old", "theta_new", "modified"),
            (
                (j, a, b, j in result.modified_indices)
                for j, (a, b) in enumerate(zip(result.thetas_old, result.thetas_new), start=1)
            ),
        )
    else:
        text = serialize.dumps(_strategy_dict(axis, call, result, equivalent_base))
    _emit(args, text)
    return EXIT_OK


def cmd_intrinsic(args, cfg: ToolConfig) -> int:
    axis = _axis(args, cfg)
    spec = cfg.model.axis(axis).spec
    if args.observed_n < 1:
        raise UsageError("--observed-n must be >= 1")
    res = identify_intrinsic(spec, args.observed_n)
    out = res.to_dict()
    out["axis"] = axis
    out["periods"] = [period(t) for t in spec.thetas]
    if args.format == "csv":
        text = serialize.csv_text(
            ("axis", "k", "observed_first_repetition", "matched_period", "gap"),
            [(axis, res.k, res.observed_first_repetition, res.matched_period, res.gap)],
        )
    else:
        text = serialize.dumps(out)
    _emit(args, text)
    return EXIT_OK


def _scan_params(args, cfg: ToolConfig, axis: str) -> AliasScanParams:
    base = cfg.scan_params(axis)
    subset = base.component_subset
    if args.subset:
        try:
            subset = frozenset(int(s) for s in args.subset.split(",") if s.strip())
        except ValueError:
            raise UsageError(f"--subset must be comma-separated integers, got {args.subset!r}") from None
    try:
        return AliasScanParams(
            alias_threshold=args.alias_threshold if args.alias_threshold is not None else base.alias_threshold,
            min_separation=args.min_separation if args.min_separation is not None else base.min_separation,
            component_subset=subset,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args, cfg: ToolConfig) -> int:
    axis = _axis(args, cfg)
    names = args.strategy or [None]
    if args.compare and len(names) != 2:
        raise UsageError("--compare needs exactly two --strategy flags")
    if len(names) > 1 and not args.compare:
        raise UsageError("several strategies need --compare")
    if args.format == "csv" and len(names) > 1:
        raise UsageError("CSV output holds one report; drop --compare or use JSON")
    params = _scan_params(args, cfg, axis)
    positions = args.positions or cfg.simulation.get("positions")
    threads = _threads(args)
    reports = []
    for name in names:
        call = _call_for(args, cfg, axis, name)
        try:
            reports.append(
                strategy_report(cfg.model, axis, call, positions, params, call.k or cfg.intrinsic.get(axis), threads)
            )
        except RiflexError as exc:
            raise UsageError(f"simulate {call.name}: {exc}") from None

    for rep in reports:
        suffix = f".{rep.strategy_name}" if len(reports) > 1 else ""
        if args.svg:
            path = Path(args.svg)
            path = path.with_name(path.stem + suffix + path.suffix)
            path.write_text(serialize.heatmap_svg(rep.matrix, title=f"{rep.strategy_name} ({axis})"))
        if args.matrix_csv:
            path = Path(args.matrix_csv)
            path = path.with_name(path.stem + suffix + path.suffix)
            path.write_text(serialize.matrix_csv(rep.matrix))

    if args.format == "csv":
        text = serialize.matrix_csv(reports[0].matrix)
    elif len(reports) == 1:
        text = serialize.dumps(reports[0].to_dict(include_matrix=args.include_matrix))
    else:
        text = serialize.dumps(
            {
                "reports": [r.to_dict(include_matrix=args.include_matrix) for r in reports],
                "delta": compare_reports(*reports),
            }
        )
    _emit(args, text)
    return EXIT_OK


def cmd_norepeat(args, cfg: Optional[ToolConfig]) -> int:
    base = cfg.norepeat if cfg is not None else None
    expected = args.expected_period or (base.expected_period if base else None)
    if expected is None:
        raise UsageError("--expected-period is required without a norepeat block in the config")
    # a config search window is tied to the config period, so drop it on override
    kw = {}
    if base is not None and args.expected_period is None:
        kw = dict(threshold=base.threshold, search_window=base.search_window, normalize=base.normalize)
    elif base is not None:
        kw = dict(threshold=base.threshold, normalize=base.normalize)
    if args.threshold is not None:
        kw["threshold"] = args.threshold
    if args.window is not None:
        kw["search_window"] = args.window
    if args.normalize is not None:
        kw["normalize"] = args.normalize
    try:
        nr = NoRepeatConfig(expected_period=expected, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    entries = []
    reports = []
    for video in args.videos:
        rep = norepeat_score(load_video(video), nr)
        reports.append(rep)
        entry = rep.to_dict()
        entry["video"] = video
        entries.append(entry)
    if args.reports_dir:
        out_dir = Path(args.reports_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, entry in enumerate(entries):
            (out_dir / f"video_{i:04d}.json").write_text(serialize.dumps(entry))
    fraction = aggregate(reports)
    if args.format == "csv":
        text = serialize.csv_text(
            ("video", "anchor_index", "mean_distance", "is_nonrepetitive"),
            [(e["video"], e["anchor_index"], e["mean_distance"], e["is_nonrepetitive"]) for e in entries],
        )
    else:
        text = serialize.dumps(
            {
                "expected_period": nr.expected_period,
                "threshold": nr.threshold,
                "search_window": nr.search_window,
                "normalize": nr.normalize,
                "videos": entries,
                "nonrepetitive_fraction": fraction,
                "norepeat_score": 100.0 * fraction,
            }
        )
    _emit(args, text)
    return EXIT_OK


def cmd_verify(args, cfg: ToolConfig) -> int:
    axis = _axis(args, cfg)
    ax = cfg.model.axis(axis)
    if args.from_result:
        try:
            data = json.loads(Path(args.from_result).read_text())
            serialize.validate(data, "strategy")
        except (OSError, ValueError) as exc:
            raise FrameDataError(f"cannot use {args.from_result}: {exc}") from None
        except jsonschema.ValidationError as exc:
            raise FrameDataError(f"{args.from_result} is not a strategy result: {exc.message}") from None
        spec = FrequencySpec(d_prime=data["d_prime"], thetas=tuple(data["thetas_new"]))
        train_len, scale, name = data["train_len"], data["scale"], data["strategy_name"]
        k = args.k or data.get("k") or cfg.intrinsic.get(axis)
    else:
        call = _call_for(args, cfg, axis)
        try:
            spec = call.run(ax.spec).spec
        except RiflexError as exc:
            raise UsageError(f"strategy {call.name}: {exc}") from None
        train_len, scale, name = call.params.train_len, call.params.scale, call.name
        k = call.k or cfg.intrinsic.get(axis)
    if k is None:
        raise UsageError("verify needs an intrinsic index (--k or intrinsic block)")
    try:
        check = check_non_repetition(spec, train_len, scale, k)
    except RiflexError as exc:
        raise UsageError(str(exc)) from None
    out = {
        "axis": axis,
        "strategy_name": name,
        "train_len": train_len,
        "scale": scale,
        "k": k,
        "satisfied": check.satisfied,
        "theta_k": check.theta_k,
        "bound": check.bound,
        "margin": check.margin,
        "period_k": period(check.theta_k),
        "extrapolated_length": train_len * scale,
    }
    if args.format == "csv":
        keys = list(out)
        text = serialize.csv_text(keys, [[out[k_] for k_ in keys]])
    else:
        text = serialize.dumps(out)
    _emit(args, text)
    return EXIT_OK if check.satisfied else EXIT_VERIFY


COMMANDS = {
    "freqs": cmd_freqs,
    "strategy": cmd_strategy,
    "intrinsic": cmd_intrinsic,
    "simulate": cmd_simulate,
    "norepeat": cmd_norepeat,
    "verify": cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else None
        if args.print_effective_config:
            if cfg is None:
                raise UsageError("--print-effective-config needs --config")
            sys.stdout.write(serialize.dumps(cfg.effective()))
            return EXIT_OK
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"riflex: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"riflex: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FrameDataError, NoRepetitionFoundError) as exc:
        print(f"riflex: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
