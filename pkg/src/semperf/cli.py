"""Command-line front end: bench, predict, calibrate, analyze.

Exit codes are a stable contract: 0 success, 2 input/config error, 3 run
failure, 4 degenerate calibration.  The config file is JSON with a
``version`` key; see example_config_dict() or README for the schema.  The
SEMPERF_CONFIG environment variable supplies the default config path.
"""

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .errors import CalibrationDegenerateError, SemperfError
from .gamma import (
    CalibrationInput,
    MachineProfile,
    analyze_usage_histogram,
    calibrate,
    gamma_from_times,
    normalize_node_usage,
    predict_time,
)
from .harness import (
    CampaignSpec,
    records_to_json,
    records_to_steps_csv,
    records_to_summary_csv,
    run_campaign,
    summary_rows,
    SUMMARY_COLUMNS,
)
from .kernel import CaseConfig
from .partition import AppProfile, partition_elements, words_per_step
from .profiles import builtin_profiles, example_config_dict
from .refdata import BASE_BANDWIDTH_MBS
from .solver import step_flops

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RUN = 3
EXIT_DEGENERATE = 4

CONFIG_ENV_VAR = "SEMPERF_CONFIG"


class InputError(Exception):
    """Bad configuration or command input; maps to exit code 2."""


@dataclass
class ToolConfig:
    """Parsed tool configuration: profiles, cases, campaign definitions."""

    machines: dict
    cases: dict
    campaigns: dict
    output_dir: Path
    formats: tuple = ("json", "csv")
    version: int = 1

    @classmethod
    def from_path(cls, path):
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from exc
        if "version" not in raw:
            raise InputError(f"config {path} is missing the version key")
        machines = dict(builtin_profiles())
        for name, params in raw.get("machines", {}).items():
            try:
                machines[name] = MachineProfile(name=name, **params)
            except (TypeError, ValueError) as exc:
                raise InputError(f"bad machine {name!r}: {exc}") from exc
        cases = {}
        for name, params in raw.get("cases", {}).items():
            try:
                cases[name] = _case_from_dict(params)
            except (TypeError, ValueError) as exc:
                raise InputError(f"bad case {name!r}: {exc}") from exc
        campaigns = raw.get("campaigns", {})
        for cname, cdef in campaigns.items():
            case_name = cdef.get("case")
            if case_name not in cases:
                raise InputError(
                    f"campaign {cname!r} references unknown case {case_name!r}"
                )
            machine_name = cdef.get("machine")
            if machine_name not in machines:
                raise InputError(
                    f"campaign {cname!r} references unknown machine "
                    f"{machine_name!r}"
                )
        output_dir = Path(raw.get("output_dir", "semperf-out"))
        return cls(
            machines=machines,
            cases=cases,
            campaigns=campaigns,
            output_dir=output_dir,
            formats=tuple(raw.get("formats", ("json", "csv"))),
            version=raw["version"],
        )

    def ensure_output_dir(self, override=None):
        out = Path(override) if override else self.output_dir
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise InputError(f"output directory {out} is not writable")
        return out


def _case_from_dict(params):
    return CaseConfig(
        elements=tuple(params["elements"]),
        degrees=tuple(params["degrees"]),
        n_fields=params.get("n_fields", 1),
        steps=params.get("steps", 1),
        cg_iters_per_step=params.get("cg_iters_per_step", 100),
    )


def _campaign_spec(config, name, mode, seed):
    cdef = config.campaigns[name]
    case = config.cases[cdef["case"]]
    machine = config.machines[cdef["machine"]]
    return CampaignSpec(
        kind=cdef["kind"],
        case=case,
        machine=machine,
        p_list=tuple(cdef.get("p_list", ())),
        weak_scales=tuple(
            (tuple(pt["elements"]), pt["p"]) for pt in cdef.get("scales", ())
        ),
        degrees=tuple(cdef.get("degrees", ())),
        budget_s=cdef.get("budget_s", 0.0),
        window_s=cdef.get("window_s", 20.0),
        jitter=cdef.get("jitter", 0.02),
        seed=seed,
        mode=mode,
    )


def _print_table(rows, columns):
    widths = {c: len(c) for c in columns}
    for row in rows:
        for c in columns:
            widths[c] = max(widths[c], len(str(row.get(c, ""))))
    header = "  ".join(c.ljust(widths[c]) for c in columns)
    print(header)
    print("-" * len(header))
    for row in rows:
        print("  ".join(str(row.get(c, "")).ljust(widths[c]) for c in columns))


def cmd_bench(args):
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not config_path:
        raise InputError(
            "no config given (pass a path or set " + CONFIG_ENV_VAR + ")"
        )
    config = ToolConfig.from_path(config_path)
    if args.campaign not in config.campaigns:
        raise InputError(
            f"campaign {args.campaign!r} not in config "
            f"(have: {', '.join(sorted(config.campaigns)) or 'none'})"
        )
    out_dir = config.ensure_output_dir(args.out)
    try:
        spec = _campaign_spec(config, args.campaign, args.mode, args.seed)
    except (ValueError, KeyError) as exc:
        raise InputError(
            f"campaign {args.campaign!r} is malformed: {exc}"
        ) from exc
    try:
        records = run_campaign(spec)
    except (SemperfError, ValueError) as exc:
        print(
            f"campaign {args.campaign!r} failed: {exc}", file=sys.stderr
        )
        return EXIT_RUN
    base = out_dir / args.campaign
    if "json" in config.formats:
        (base.parent / f"{base.name}_records.json").write_text(
            records_to_json(records), encoding="utf-8"
        )
    if "csv" in config.formats:
        (base.parent / f"{base.name}_summary.csv").write_text(
            records_to_summary_csv(records), encoding="utf-8"
        )
        (base.parent / f"{base.name}_steps.csv").write_text(
            records_to_steps_csv(records), encoding="utf-8"
        )
    for rec in records:
        if rec.window_samples:
            path = base.parent / f"{base.name}_windows.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["timestamp", "usage"])
                for i, s in enumerate(rec.window_samples):
                    # repr round-trips the float exactly
                    writer.writerow([f"{i * spec.window_s:.1f}", repr(s)])
    _print_table(summary_rows(records), SUMMARY_COLUMNS)
    for rec in records:
        for warning in rec.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    return EXIT_OK


def cmd_predict(args):
    machines = dict(builtin_profiles())
    if args.config or os.environ.get(CONFIG_ENV_VAR):
        config = ToolConfig.from_path(
            args.config or os.environ.get(CONFIG_ENV_VAR)
        )
        machines.update(config.machines)
    if args.machine not in machines:
        raise InputError(
            f"unknown machine {args.machine!r} "
            f"(have: {', '.join(sorted(machines))})"
        )
    machine = machines[args.machine]
    case = CaseConfig(
        elements=tuple(args.elements),
        degrees=tuple(args.degrees),
        n_fields=args.n_fields,
        cg_iters_per_step=args.iters,
    )
    plan = partition_elements(case, args.ranks)
    flops = step_flops(case, args.ranks)
    words = words_per_step(plan, case, case.cg_iters_per_step)
    messages = plan.messages_per_exchange * case.cg_iters_per_step
    td = predict_time(
        machine.at_degree(max(case.degrees)),
        AppProfile(flops, words),
        args.ranks,
        messages,
    )
    gamma = gamma_from_times(td)
    eff = td.t_p / td.total
    result = {
        "machine": machine.name,
        "P": args.ranks,
        "flops_per_step": flops,
        "words_per_step": words,
        "messages_per_step": messages,
        "t_p_s": td.t_p,
        "t_c_s": td.t_c,
        "t_l_s": td.t_l,
        "t_total_s": td.total,
        "gamma": "inf" if math.isinf(gamma) else gamma,
        "efficiency": eff,
        "speedup": args.ranks * eff,
    }
    if args.json:
        print(json.dumps(result, sort_keys=True, indent=2))
    else:
        width = max(len(k) for k in result)
        for key, value in result.items():
            shown = f"{value:.6g}" if isinstance(value, float) else value
            print(f"{key.ljust(width)}  {shown}")
    return EXIT_OK


def _read_calibration_table(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read table {path}: {exc}") from exc
    rows = []
    if path.suffix.lower() == ".json":
        for entry in json.loads(text):
            rows.append(
                CalibrationInput(
                    name=entry["name"],
                    t_p=float(entry["t_p"]),
                    gamma=float(entry["gamma"]),
                    bandwidth_model=entry["bandwidth_model"],
                    sharing=float(entry.get("sharing", 1.0)),
                )
            )
        return rows
    reader = csv.DictReader(text.splitlines())
    required = {"name", "t_p", "gamma", "bandwidth_model"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise InputError(
            f"table {path} needs columns name,t_p,gamma,bandwidth_model"
            "[,sharing]"
        )
    for entry in reader:
        rows.append(
            CalibrationInput(
                name=entry["name"],
                t_p=float(entry["t_p"]),
                gamma=float(entry["gamma"]),
                bandwidth_model=entry["bandwidth_model"].strip(),
                sharing=float(entry.get("sharing") or 1.0),
            )
        )
    return rows


def cmd_calibrate(args):
    try:
        rows = _read_calibration_table(args.table)
    except (ValueError, KeyError) as exc:
        raise InputError(f"bad calibration table: {exc}") from exc
    try:
        fit = calibrate(rows, base_bandwidth=args.base_bandwidth)
    except CalibrationDegenerateError as exc:
        print(f"calibration degenerate: {exc}", file=sys.stderr)
        if exc.inputs:
            print(f"inputs: {', '.join(exc.inputs)}", file=sys.stderr)
        return EXIT_DEGENERATE
    print(f"W      {fit.w_mb:10.4f} MB per step")
    print(f"alpha  {fit.alpha:10.4f}")
    print(f"T_L    {fit.t_l:10.4f} s")
    print(f"b2     {fit.scaled_bandwidth:10.4f} MB/s")
    for name, resid in zip(fit.input_names, fit.residuals):
        print(f"residual[{name}]  {resid:+.3e} s")
    out = Path(args.out) if args.out else Path("gamma_fit.json")
    out.write_text(fit.to_json(indent=2), encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def _read_samples(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read samples {path}: {exc}") from exc
    samples = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        try:
            samples.append(float(parts[-1]))
        except ValueError:
            continue  # header line
    if not samples:
        raise InputError(f"no usage samples found in {path}")
    return samples


def cmd_analyze(args):
    samples = _read_samples(args.samples)
    if (args.cores_per_node is None) != (args.active_ranks is None):
        raise InputError(
            "--cores-per-node and --active-ranks must be given together"
        )
    try:
        if args.cores_per_node is not None:
            samples = [
                normalize_node_usage(
                    s, args.active_ranks, args.cores_per_node
                ).value
                for s in samples
            ]
        analysis = analyze_usage_histogram(samples, bin_width=args.bin_width)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(args.out) if args.out else Path(args.samples).with_suffix(".hist")
    lines = [
        f"{edge:.6f} {count}"
        for edge, count in zip(analysis.bin_edges, analysis.counts)
    ]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    gamma = "inf" if math.isinf(analysis.gamma) else f"{analysis.gamma:.4f}"
    print(f"samples  {len(samples)}")
    print(f"mean_E   {analysis.mean:.4f}")
    print(f"gamma    {gamma}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_init_config(args):
    path = Path(args.path)
    path.write_text(
        json.dumps(example_config_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="semperf",
        description=(
            "Spectral-element benchmark kernel and Gamma-model toolkit"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a configured campaign")
    bench.add_argument("campaign", help="campaign name from the config")
    bench.add_argument(
        "--config", default=None, help=f"config path (default ${CONFIG_ENV_VAR})"
    )
    bench.add_argument("--mode", choices=("sim", "exec"), default="sim")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None, help="output directory override")
    bench.set_defaults(func=cmd_bench)

    predict = sub.add_parser("predict", help="model one scaling point")
    predict.add_argument("--machine", required=True)
    predict.add_argument("--config", default=None)
    predict.add_argument(
        "--elements", "-E", nargs=3, type=int, default=(8, 8, 8)
    )
    predict.add_argument(
        "--degrees", "-N", nargs=3, type=int, default=(8, 8, 8)
    )
    predict.add_argument("--n-fields", type=int, default=1)
    predict.add_argument("--ranks", "-P", type=int, default=1)
    predict.add_argument("--iters", type=int, default=100)
    predict.add_argument("--json", action="store_true")
    predict.set_defaults(func=cmd_predict)

    calib = sub.add_parser(
        "calibrate", help="fit (W, alpha, T_L) from a measurement table"
    )
    calib.add_argument("table", help="CSV or JSON measurement table")
    calib.add_argument(
        "--base-bandwidth", type=float, default=BASE_BANDWIDTH_MBS
    )
    calib.add_argument("--out", default=None, help="fit artifact path")
    calib.set_defaults(func=cmd_calibrate)

    analyze = sub.add_parser(
        "analyze", help="histogram per-window efficiency samples"
    )
    analyze.add_argument("samples", help="CSV of timestamp,usage rows")
    analyze.add_argument("--bin-width", type=float, default=0.01)
    analyze.add_argument("--cores-per-node", type=int, default=None)
    analyze.add_argument("--active-ranks", type=int, default=None)
    analyze.add_argument("--out", default=None, help="histogram output path")
    analyze.set_defaults(func=cmd_analyze)

    init = sub.add_parser("init-config", help="write an example config file")
    init.add_argument("path", nargs="?", default="semperf.json")
    init.set_defaults(func=cmd_init_config)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SemperfError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
