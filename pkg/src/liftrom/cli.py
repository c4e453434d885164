"""Command-line interface.

Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import pipeline as pl
from .config import PipelineConfig, load_config
from .dmd import DmdModel, RankSpec, fit_dmd, read_ensemble_csv, write_ensemble_csv, write_forecast_csv
from .errors import (
    ConfigError,
    DegenerateDataError,
    FitError,
    GeometryError,
    InputError,
    LiftromError,
    PipelineError,
)
from .fom_surrogate import run_ensemble

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("liftrom")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _load(args) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output_dir = args.out
    return config.validate()


def _out(config: PipelineConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sample(args):
    config = _load(args)
    dom = config.domain.build()
    n = config.n_train if args.n is None else args.n
    strategy = args.strategy or config.sampling
    samples = pl.sample_parameters(dom, n, config.seed, strategy)
    path = _out(config) / args.file
    pl.write_samples_csv(samples, path)
    log.info("wrote %d samples to %s", n, path)


def cmd_deform(args):
    config = _load(args)
    if args.mesh:
        config.geometry.mesh = args.mesh
    if args.mu is not None:
        mu = args.mu
    elif args.mu_file:
        mu = pl.read_samples_csv(args.mu_file)[args.row]
    else:
        mu = np.zeros(config.domain.dimension)
    profile, mesh = pl.deform_and_morph(config, mu)
    log.info("deformed profile (%d stations) and morphed mesh (%d points) in %s",
             profile.stations.size, len(mesh), config.output_dir)


def cmd_fom_run(args):
    config = _load(args)
    dom = config.domain.build()
    if args.samples:
        samples = pl.read_samples_csv(args.samples)
    else:
        samples = pl.sample_parameters(dom, config.n_train, config.seed, config.sampling)
    t_a, t_b = (args.window if args.window else (config.t_a, config.t_b))
    dt = args.dt or config.fom.dt
    m = int(round((t_b - t_a) / dt))
    times = t_b - dt * np.arange(m - 1, -1, -1)
    ens = run_ensemble(config.surrogate.build(), samples, times, dom)
    path = _out(config) / args.file
    write_ensemble_csv(ens, path)
    log.info("wrote %s ensemble to %s", ens.shape, path)


def cmd_dmd_fit(args):
    config = _load(args)
    ens = read_ensemble_csv(args.ensemble)
    if args.rank is not None:
        spec = RankSpec.fixed(args.rank)
    elif args.energy is not None:
        spec = RankSpec.energy(args.energy)
    else:
        spec = config.dmd.build()
    model = fit_dmd(ens, spec)
    path = _out(config) / args.file
    model.save(path)
    log.info("DMD rank %d written to %s", model.rank, path)


def cmd_dmd_forecast(args):
    config = _load(args)
    model = DmdModel.load(args.model)
    if args.ensemble:
        ids = read_ensemble_csv(args.ensemble).sample_ids
    else:
        ids = [f"s{i:03d}" for i in range(model.modes.shape[0])]
    path = _out(config) / args.file
    write_forecast_csv(model, args.times, ids, path)
    log.info("forecast at %d times written to %s", len(args.times), path)


def cmd_dyas(args):
    config = _load(args)
    if args.threshold is not None:
        config.dyas.freeze_threshold = args.threshold
    series, frozen = pl.run_dyas(config)
    names = pl.parameter_names(config.domain.dimension)
    print(json.dumps({"frozen_indices": [i + 1 for i in frozen],
                      "frozen_parameters": [names[i] for i in frozen]}))


def cmd_gpr_compare(args):
    config = _load(args)
    if args.times:
        config.eval_times = args.times
    report = pl.run_pipeline(config)
    for t, ef, er in zip(report.eval_times, report.errors_full, report.errors_reduced):
        print(f"t={t:g}  full={ef:.6g}  reduced={er:.6g}")


def cmd_pipeline(args):
    config = _load(args)
    report = pl.run_pipeline(config)
    summary = report.to_dict()
    print(json.dumps({
        "frozen_parameters": summary["frozen_parameters"],
        "dmd_rank": summary["dmd"]["rank"],
        "final_time": report.eval_times[-1],
        "error_full": report.errors_full[-1],
        "error_reduced": report.errors_reduced[-1],
    }))


def cmd_sweeps(args):
    config = _load(args)
    dmd_rows, gpr_rows = pl.sensitivity_sweeps(config)
    log.info("DMD sweep: %d rows; GPR sweep: %d rows", len(dmd_rows), len(gpr_rows))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="YAML pipeline config")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="liftrom", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="YAML pipeline config")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--quiet", action="store_true", default=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw parameter samples")
    p.add_argument("--n", type=int)
    p.add_argument("--strategy", choices=["uniform", "latin-hypercube"])
    p.add_argument("--file", default="samples.csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("deform", parents=[common], help="deform the section and morph the mesh")
    p.add_argument("--mu", type=_floats, help="comma-separated parameter vector")
    p.add_argument("--mu-file", help="samples CSV to read the vector from")
    p.add_argument("--row", type=int, default=0)
    p.add_argument("--mesh", help="reference mesh CSV (x,y,tag)")
    p.set_defaults(func=cmd_deform)

    p = sub.add_parser("fom-run", parents=[common], help="evaluate the surrogate ensemble")
    p.add_argument("--samples", help="samples CSV (default: draw n_train samples)")
    p.add_argument("--window", type=_floats, help="t_a,t_b")
    p.add_argument("--dt", type=float)
    p.add_argument("--file", default="ensemble.csv")
    p.set_defaults(func=cmd_fom_run)

    p = sub.add_parser("dmd-fit", parents=[common], help="fit DMD on an ensemble CSV")
    p.add_argument("--ensemble", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--rank", type=int)
    group.add_argument("--energy", type=float)
    p.add_argument("--file", default="dmd_model.json")
    p.set_defaults(func=cmd_dmd_fit)

    p = sub.add_parser("dmd-forecast", parents=[common], help="forecast with a saved DMD model")
    p.add_argument("--model", required=True)
    p.add_argument("--times", type=_floats, required=True)
    p.add_argument("--ensemble", help="ensemble CSV supplying sample ids")
    p.add_argument("--file", default="forecast.csv")
    p.set_defaults(func=cmd_dmd_forecast)

    p = sub.add_parser("dyas", parents=[common], help="dynamic active subspaces and frozen set")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_dyas)

    p = sub.add_parser("gpr-compare", parents=[common], help="full vs reduced GPR errors")
    p.add_argument("--times", type=_floats)
    p.set_defaults(func=cmd_gpr_compare)

    p = sub.add_parser("pipeline", parents=[common], help="run the whole pipeline")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweeps", parents=[common], help="training-set sensitivity sweeps")
    p.set_defaults(func=cmd_sweeps)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        config_like = isinstance(exc.cause, (ConfigError, InputError, OSError))
        return EXIT_CONFIG if config_like else EXIT_NUMERICAL
    except (ConfigError, InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FitError, DegenerateDataError, GeometryError, LiftromError, np.linalg.LinAlgError,
            ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
