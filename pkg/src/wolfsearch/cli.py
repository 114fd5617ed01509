"""Operator entry point: synth, lve, eval, and density pipelines.

Each subcommand reads one JSON experiment config and writes its outputs
into the --out directory; relative paths in the config resolve against
that directory, so the natural flow is four commands sharing one
directory:

    wolfsearch synth   --config exp.json --out run0
    wolfsearch lve     --config exp.json --out run0 --setting single-a
    wolfsearch eval    --config exp.json --out run0
    wolfsearch density --config exp.json --out run0

Exit codes are a stable scripting contract: 0 success, 1 usage or
config error (bad flags, malformed config, missing input files),
2 runtime error (search, numeric, or oracle failure). Outputs carry no
timestamps and rerunning a command overwrites them byte-identically.
"""

from __future__ import annotations

import argparse
import os
import sys

from .enrollment import (
    EnrollmentSet,
    genuine_impostor_pairs,
    load_enrollment,
    save_enrollment,
    split_dev_eval,
)
from .evaluation import eer_threshold, evaluate_master, score_pairs
from .lve import LveConfig, SystemSpec, run_lve
from .matchers import Matcher
from .storage import (
    ConfigError,
    ExperimentConfig,
    load_experiment_config,
    read_master_csv,
    resolve_path,
    write_density_json,
    write_eval_report_json,
    write_master_csv,
    write_projection_csv,
    write_provenance_json,
    write_result_json,
    write_trace_csv,
)
from .synth import density_report, sample_enrollment

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; our contract reserves 2 for runtime."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="wolfsearch",
        description="Master-sample search and evaluation pipelines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment config JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")

    p_synth = sub.add_parser("synth", help="sample a synthetic enrollment database")
    common(p_synth)
    p_lve = sub.add_parser("lve", help="run the latent search against systems")
    common(p_lve)
    p_lve.add_argument("--setting", default=None,
                       help="named system list from lve.settings")
    p_eval = sub.add_parser("eval", help="evaluate a master sample")
    common(p_eval)
    p_eval.add_argument("--master", default=None,
                        help="master embedding CSV (default: lve output)")
    p_dens = sub.add_parser("density", help="density percentile of a master sample")
    common(p_dens)
    p_dens.add_argument("--master", default=None,
                        help="master embedding CSV (default: lve output)")
    return parser


def _load_config(args) -> ExperimentConfig:
    if args.seed is not None and args.seed < 0:
        raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
    return load_experiment_config(args.config, seed_override=args.seed)


def _load_enrollment_at(path: str, out_dir: str) -> EnrollmentSet:
    return load_enrollment(resolve_path(path, out_dir))


def cmd_synth(args) -> int:
    config = _load_config(args)
    if config.synth is None:
        raise ConfigError("config has no 'synth' section")
    os.makedirs(args.out, exist_ok=True)
    full = sample_enrollment(config.synth, name="enrollment")
    dev, ev = split_dev_eval(full, config.dev_fraction, config.seed + 2)
    names = config.output
    save_enrollment(full, os.path.join(args.out, names.enrollment))
    save_enrollment(dev, os.path.join(args.out, names.dev))
    save_enrollment(ev, os.path.join(args.out, names.eval))
    write_provenance_json(
        config.synth,
        os.path.join(args.out, names.provenance),
        seed=config.seed,
        dev_fraction=config.dev_fraction,
    )
    print(
        f"wrote {names.enrollment} ({len(full)} rows), "
        f"{names.dev} ({len(dev)} rows), {names.eval} ({len(ev)} rows)"
    )
    return 0


def _auto_threshold(matcher: Matcher, enrollment: EnrollmentSet, seed: int) -> float:
    genuine, impostor = genuine_impostor_pairs(enrollment, seed=seed)
    if not genuine or not impostor:
        raise ConfigError(
            f"enrollment {enrollment.name!r} cannot form both genuine and "
            "impostor pairs; cannot derive an FMR threshold"
        )
    report = eer_threshold(
        score_pairs(matcher, genuine), score_pairs(matcher, impostor)
    )
    return report.threshold


def cmd_lve(args) -> int:
    config = _load_config(args)
    if config.generator is None:
        raise ConfigError("config has no 'generator' section")
    system_configs = config.resolve_setting(args.setting)
    os.makedirs(args.out, exist_ok=True)

    systems = []
    for sc in system_configs:
        enrollment = _load_enrollment_at(sc.enrollment, args.out)
        systems.append(
            SystemSpec(
                matcher=sc.matcher_spec(enrollment.embed_dim),
                enrollment=enrollment,
                weight=sc.weight,
                name=sc.name,
            )
        )

    fmr_trace = config.lve.fmr_trace
    if fmr_trace == "auto":
        thresholds = []
        for spec in systems:
            with Matcher(spec.matcher) as matcher:
                thresholds.append(
                    _auto_threshold(matcher, spec.enrollment, config.seed)
                )
        thresholds = tuple(thresholds)
    elif fmr_trace is None:
        thresholds = None
    else:
        if len(fmr_trace) != len(systems):
            raise ConfigError(
                f"lve.fmr_trace lists {len(fmr_trace)} thresholds for "
                f"{len(systems)} systems"
            )
        thresholds = tuple(fmr_trace)

    run_config = LveConfig(
        generator=config.generator,
        systems=tuple(systems),
        population=config.lve.population,
        iterations=config.lve.iterations,
        sigma0=config.lve.sigma0,
        mean0=None,
        seed=config.seed,
        fmr_thresholds=thresholds,
    )
    result = run_lve(run_config)
    names = config.output
    write_result_json(
        result,
        os.path.join(args.out, names.result),
        seed=config.seed,
        population=config.lve.population,
        setting=args.setting,
        fmr_thresholds=thresholds,
    )
    write_trace_csv(result, os.path.join(args.out, names.trace))
    write_master_csv(result.best_embedding, os.path.join(args.out, names.master))
    print(
        f"best_score={result.best_score!r} at iteration {result.best_iteration}; "
        f"wrote {names.result}, {names.trace}, {names.master}"
    )
    return 0


def _master_path(args, config: ExperimentConfig) -> str:
    if args.master is not None:
        return resolve_path(args.master, args.out)
    return os.path.join(args.out, config.output.master)


def cmd_eval(args) -> int:
    config = _load_config(args)
    master = read_master_csv(_master_path(args, config))
    dev = _load_enrollment_at(config.eval.dev, args.out)
    ev = _load_enrollment_at(config.eval.eval, args.out)
    if dev.embed_dim != master.size:
        raise ValueError(
            f"master has dim {master.size}, enrollment has dim {dev.embed_dim}"
        )
    os.makedirs(args.out, exist_ok=True)
    with Matcher(config.eval.matcher_spec(dev.embed_dim)) as matcher:
        report = evaluate_master(master, dev, ev, matcher, pair_seed=config.seed)
    out_path = os.path.join(args.out, config.output.report)
    write_eval_report_json(report, out_path, threshold_source=config.eval.dev)
    print(
        f"success={report.success} master_fmr_eval={report.master_fmr_eval!r} "
        f"normal_fmr_eval={report.normal_fmr_eval!r}; wrote {config.output.report}"
    )
    return 0


def cmd_density(args) -> int:
    config = _load_config(args)
    master = read_master_csv(_master_path(args, config))
    reference_name = config.eval.density_reference or config.output.enrollment
    reference = _load_enrollment_at(reference_name, args.out)
    os.makedirs(args.out, exist_ok=True)
    report = density_report(master, reference.matrix, config.eval.bandwidth)
    write_density_json(report, os.path.join(args.out, config.output.density))
    labels = [(t.identity, t.item_id) for t in reference.templates]
    write_projection_csv(
        report, labels, os.path.join(args.out, config.output.projection)
    )
    print(
        f"percentile={report.percentile!r}; "
        f"wrote {config.output.density}, {config.output.projection}"
    )
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "lve": cmd_lve,
    "eval": cmd_eval,
    "density": cmd_density,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, OSError, ValueError) as e:
        sys.stderr.write(f"wolfsearch {args.command}: error: {e}\n")
        return 1
    except Exception as e:
        sys.stderr.write(f"wolfsearch {args.command}: runtime error: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
