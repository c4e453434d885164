"""End-to-end pipeline: sampling, surrogate runs, DMD forecasting, DyAS,
parameter freezing and the full- vs reduced-space GPR comparison.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.stats import qmc

from . import active_subspaces as asp
from .config import PipelineConfig
from .dmd import DmdModel, SnapshotEnsemble, fit_dmd, forecast, reconstruction_error, write_ensemble_csv
from .errors import InputError, LiftromError, PipelineError
from .fom_surrogate import SurrogateSpec, gradient_provider, lift, run_ensemble
from .gpr import fit_gpr
from .rbf_morph import (
    PointSet2D,
    fit_rbf,
    morph_mesh,
    read_mesh_csv,
    reference_mesh,
    write_mesh_csv,
)
from .shape_param import PARAMETER_NAMES, AirfoilProfile, deform_profile, naca4_profile, write_profile_csv

log = logging.getLogger(__name__)

FAILURE_MARKER = "FAILED.json"


def parameter_names(k: int) -> list[str]:
    return list(PARAMETER_NAMES) if k == len(PARAMETER_NAMES) else [f"p{i}" for i in range(1, k + 1)]


def sample_parameters(dom: asp.ParameterDomain, n: int, seed=0, strategy: str = "uniform") -> np.ndarray:
    """``n`` points in the domain box, shape ``(n, k)``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts.  Latin
    hypercube puts exactly one sample in each of ``n`` equal bins per
    coordinate.
    """
    if n < 0:
        raise InputError("sample count must be non-negative")
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.empty((0, dom.dimension))
    if strategy == "uniform":
        unit = rng.random((n, dom.dimension))
    elif strategy == "latin-hypercube":
        unit = qmc.LatinHypercube(d=dom.dimension, seed=rng).random(n)
    else:
        raise InputError(f"unknown sampling strategy {strategy!r}")
    return dom.lower + unit * dom.width


def relative_error(exact, approx) -> float:
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    if exact.shape != approx.shape:
        raise InputError("exact and approximate vectors must have equal length")
    norm = np.linalg.norm(exact)
    if norm == 0:
        raise ZeroDivisionError("relative error undefined for a zero exact vector")
    return float(np.linalg.norm(exact - approx) / norm)


def mean_relative_error(exact, approx) -> float:
    """Average over samples of ``|exact_i - approx_i| / |exact_i|``."""
    exact = np.asarray(exact, dtype=float)
    approx = np.asarray(approx, dtype=float)
    return float(np.mean(np.abs(exact - approx) / np.abs(exact)))


def window_times(config: PipelineConfig) -> np.ndarray:
    """Instants ``t_a + dt, ..., t_b`` of the high-fidelity training window."""
    m = int(round((config.t_b - config.t_a) / config.fom.dt))
    return config.t_b - config.fom.dt * np.arange(m - 1, -1, -1)


@dataclass
class PipelineReport:
    eval_times: list
    errors_full: list
    errors_reduced: list
    frozen: list
    kept: list
    parameter_names: list
    dmd_rank: int
    dmd_eigenvalues: np.ndarray
    dmd_training_residual: float
    dyas: asp.DyasSeries
    timings: dict = field(default_factory=dict)
    train_samples: np.ndarray | None = None
    test_samples: np.ndarray | None = None
    train_targets: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        names = self.parameter_names
        return {
            "status": "ok",
            "eval_times": [float(t) for t in self.eval_times],
            "errors_full": [float(e) for e in self.errors_full],
            "errors_reduced": [float(e) for e in self.errors_reduced],
            "frozen_indices": [i + 1 for i in self.frozen],
            "frozen_parameters": [names[i] for i in self.frozen],
            "kept_parameters": [names[i] for i in self.kept],
            "dmd": {
                "rank": int(self.dmd_rank),
                "eigenvalues": [[float(z.real), float(z.imag)] for z in self.dmd_eigenvalues],
                "training_residual": float(self.dmd_training_residual),
            },
            "dyas": [
                {
                    "t": float(t),
                    "active_dim": int(s.active_dim),
                    "eigenvalues": [float(v) for v in s.eigenvalues],
                    "w1": [float(v) for v in s.first_eigenvector],
                }
                for t, s in zip(self.dyas.times, self.dyas.subspaces)
            ],
        }


class _Stages:
    """Stage bookkeeping: timing plus stage-tagged failures."""

    def __init__(self):
        self.timings = {}

    @contextmanager
    def __call__(self, name):
        start = time.perf_counter()
        log.info("stage %s", name)
        try:
            yield
        except PipelineError:
            raise
        except (LiftromError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise PipelineError(name, exc) from exc
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start


def _tlabel(t: float) -> str:
    return f"t{float(t):g}s"


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else repr(float(v)) for v in row])


def write_samples_csv(samples, path, names=None, prefix="s") -> None:
    samples = np.asarray(samples, dtype=float)
    names = names or parameter_names(samples.shape[1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", *names])
        for i, row in enumerate(samples):
            writer.writerow([f"{prefix}{i:03d}", *(repr(float(v)) for v in row)])


def read_samples_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "sample_id":
            raise InputError(f"unexpected samples header {header!r}")
        rows = [[float(v) for v in row[1:]] for row in reader if row]
    return np.array(rows, dtype=float).reshape(len(rows), len(header) - 1)


class _Problem:
    """Objects derived once from a config and shared by pipeline entry points."""

    def __init__(self, config: PipelineConfig):
        config.validate()
        self.config = config
        self.domain = config.domain.build()
        self.spec: SurrogateSpec = config.surrogate.build()
        self.rank_spec = config.dmd.build()
        self.names = parameter_names(self.domain.dimension)
        train_seed, test_seed = np.random.SeedSequence(config.seed).spawn(2)
        self.train = sample_parameters(self.domain, config.n_train, train_seed, config.sampling)
        self.test = sample_parameters(self.domain, config.n_test, test_seed, config.sampling)
        self.train_ids = [f"train{i:03d}" for i in range(config.n_train)]
        self._dmd: DmdModel | None = None
        self.ensemble: SnapshotEnsemble | None = None

    def run_fom(self) -> SnapshotEnsemble:
        self.ensemble = run_ensemble(self.spec, self.train, window_times(self.config), self.domain,
                                     self.train_ids)
        return self.ensemble

    def fit_dmd(self) -> DmdModel:
        self._dmd = fit_dmd(self.ensemble, self.rank_spec)
        return self._dmd

    def train_targets(self, t: float) -> np.ndarray:
        """High-fidelity values up to ``t_b``, DMD forecasts beyond."""
        if t <= self.config.t_b:
            return lift(self.spec, self.train, t, self.domain)
        return forecast(self._dmd, t)

    def truth(self, samples, t: float) -> np.ndarray:
        return lift(self.spec, samples, t, self.domain)

    def fit_gpr(self, z, y):
        g = self.config.gpr
        return fit_gpr(z, y, optimize=g.optimize, lengthscale=g.lengthscale,
                       signal_variance=g.signal_variance, noise_variance=g.noise_variance,
                       n_restarts=g.n_restarts, seed=self.config.seed, center_targets=g.center_targets)

    def gradient_provider(self):
        if self.config.dyas.gradient_provider == "surrogate":
            return gradient_provider(self.spec, self.domain)
        z = self.domain.normalize(self.train)
        scale = self.domain.gradient_scale()
        cache = {}

        def provider(mu, t):
            if t not in cache:
                cache[t] = self.fit_gpr(z, self.train_targets(t))
            return cache[t].gradient(self.domain.normalize(mu)) / scale

        return provider

    def dyas(self) -> asp.DyasSeries:
        return asp.compute_dyas(self.train, self.gradient_provider(), self.config.dyas.times, self.domain)

    def compare(self, t: float, kept, n_train: int | None = None):
        """Full- and reduced-space GPR relative test errors at time ``t``."""
        n = self.config.n_train if n_train is None else n_train
        z_train = self.domain.normalize(self.train[:n])
        z_test = self.domain.normalize(self.test)
        y = self.train_targets(t)[:n]
        exact = self.truth(self.test, t)
        full = self.fit_gpr(z_train, y)
        err_full = relative_error(exact, full.predict(z_test)[0])
        if len(kept) == self.domain.dimension:
            return err_full, err_full
        reduced = self.fit_gpr(z_train[:, kept], y)
        err_red = relative_error(exact, reduced.predict(z_test[:, kept])[0])
        return err_full, err_red


def _write_dyas_files(out: Path, problem: _Problem, series: asp.DyasSeries) -> None:
    z = problem.domain.normalize(problem.train)
    for t, sub in zip(series.times, series.subspaces):
        label = _tlabel(t)
        _write_rows(out / f"dyas_w1_{label}.csv", ["parameter_index", "parameter_name", "w1_component"],
                    [(str(j + 1), problem.names[j], w) for j, w in enumerate(sub.first_eigenvector)])
        _write_rows(out / f"dyas_eigenvalues_{label}.csv", ["index", "lambda"],
                    [(str(j + 1), lam) for j, lam in enumerate(sub.eigenvalues)])
        table = asp.sufficiency_summary(replace(sub, active_dim=1), z, problem.train_targets(t))
        _write_rows(out / f"sufficiency_{label}.csv", ["active_variable", "f_value"], table)


def _prepare_output(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / FAILURE_MARKER
    if marker.exists():
        marker.unlink()
    return out


def _mark_failure(out: Path | None, exc: PipelineError) -> None:
    if out is None:
        return
    with open(out / FAILURE_MARKER, "w") as fh:
        json.dump({"status": "failed", "stage": exc.stage, "error": str(exc.cause)}, fh, indent=2)


def run_pipeline(config: PipelineConfig, out_dir=None, write: bool = True) -> PipelineReport:
    """Run every stage and (optionally) write the report and plot-data files.

    Raises
    ------
    PipelineError
        Tagged with the failing stage; a ``FAILED.json`` marker is written
        next to whatever artifacts were already flushed.
    """
    stage = _Stages()
    out = _prepare_output(out_dir or config.output_dir) if write else None
    try:
        with stage("setup"):
            problem = _Problem(config)
        with stage("sampling"):
            if out is not None:
                write_samples_csv(problem.train, out / "samples_train.csv", problem.names, "train")
                write_samples_csv(problem.test, out / "samples_test.csv", problem.names, "test")
        with stage("fom"):
            ens = problem.run_fom()
            if out is not None:
                write_ensemble_csv(ens, out / "ensemble_train.csv")
        with stage("dmd"):
            model = problem.fit_dmd()
            residual = reconstruction_error(model, ens)
            if out is not None:
                model.save(out / "dmd_model.json")
        with stage("dyas"):
            series = problem.dyas()
        with stage("freeze"):
            frozen = asp.frozen_parameters(series, config.dyas.freeze_threshold)
            kept = [j for j in range(problem.domain.dimension) if j not in frozen]
            if not kept:
                raise InputError("freezing threshold removes every parameter")
        errors_full, errors_red, targets = [], [], {}
        with stage("gpr"):
            for t in config.eval_times:
                targets[float(t)] = problem.train_targets(float(t))
                ef, er = problem.compare(float(t), kept)
                errors_full.append(ef)
                errors_red.append(er)
        report = PipelineReport(
            eval_times=[float(t) for t in config.eval_times],
            errors_full=errors_full,
            errors_reduced=errors_red,
            frozen=frozen,
            kept=kept,
            parameter_names=problem.names,
            dmd_rank=model.rank,
            dmd_eigenvalues=model.eigenvalues,
            dmd_training_residual=residual,
            dyas=series,
            timings=stage.timings,
            train_samples=problem.train,
            test_samples=problem.test,
            train_targets=targets,
        )
        if out is not None:
            with stage("report"):
                write_report(report, out)
                _write_dyas_files(out, problem, series)
    except PipelineError as exc:
        _mark_failure(out, exc)
        raise
    return report


def write_report(report: PipelineReport, out: Path) -> None:
    with open(out / "report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    _write_rows(out / "errors_full.csv", ["t", "relative_error"], zip(report.eval_times, report.errors_full))
    _write_rows(out / "errors_reduced.csv", ["t", "relative_error"],
                zip(report.eval_times, report.errors_reduced))
    with open(out / "timings.json", "w") as fh:
        json.dump({k: round(v, 6) for k, v in report.timings.items()}, fh, indent=2)


def run_dyas(config: PipelineConfig, out_dir=None, write: bool = True):
    """DyAS stage alone; returns the series and the frozen index set (0-based)."""
    stage = _Stages()
    out = _prepare_output(out_dir or config.output_dir) if write else None
    try:
        with stage("setup"):
            problem = _Problem(config)
        if config.dyas.gradient_provider == "gpr" and max(config.dyas.times) > config.t_b:
            with stage("fom"):
                problem.run_fom()
            with stage("dmd"):
                problem.fit_dmd()
        with stage("dyas"):
            series = problem.dyas()
            frozen = asp.frozen_parameters(series, config.dyas.freeze_threshold)
        if out is not None:
            with stage("report"):
                _write_dyas_files(out, problem, series)
                with open(out / "frozen.json", "w") as fh:
                    json.dump({"frozen_indices": [i + 1 for i in frozen],
                               "frozen_parameters": [problem.names[i] for i in frozen]}, fh, indent=2)
    except PipelineError as exc:
        _mark_failure(out, exc)
        raise
    return series, frozen


def sensitivity_sweeps(config: PipelineConfig, out_dir=None, write: bool = True):
    """DMD error vs. sampling period, and GPR error vs. training-set size.

    Returns two arrays: rows ``(dt_dmd, mean_relative_error)`` at the last
    evaluation time, and rows ``(n_train, error_full, error_reduced)`` at
    ``t_b``.
    """
    stage = _Stages()
    out = _prepare_output(out_dir or config.output_dir) if write else None
    try:
        with stage("setup"):
            problem = _Problem(config)
        with stage("fom"):
            ens = problem.run_fom()
        t_final = float(max(config.eval_times))
        exact = problem.truth(problem.train, t_final)
        dmd_rows = []
        with stage("dmd"):
            for dt_dmd in config.sweeps.dt_values:
                step = int(round(dt_dmd / config.fom.dt))
                if step < 1 or not np.isclose(step * config.fom.dt, dt_dmd, rtol=1e-9, atol=0):
                    raise InputError(f"sweep period {dt_dmd} is not a multiple of fom.dt")
                sub = ens.subsample(step)
                if sub.values.shape[1] < 2:
                    raise InputError(f"sweep period {dt_dmd} leaves fewer than two snapshots")
                model = fit_dmd(sub, problem.rank_spec)
                dmd_rows.append((dt_dmd, mean_relative_error(exact, forecast(model, t_final))))
        with stage("dyas"):
            series = problem.dyas()
            frozen = asp.frozen_parameters(series, config.dyas.freeze_threshold)
            kept = [j for j in range(problem.domain.dimension) if j not in frozen]
        gpr_rows = []
        with stage("gpr"):
            for n in config.sweeps.train_sizes:
                if not 1 <= n <= config.n_train:
                    raise InputError(f"sweep size {n} outside 1..n_train")
                ef, er = problem.compare(config.t_b, kept, n_train=int(n))
                gpr_rows.append((int(n), ef, er))
        if out is not None:
            with stage("report"):
                _write_rows(out / "sweep_dmd.csv", ["dt_dmd", "mean_relative_error"], dmd_rows)
                _write_rows(out / "sweep_gpr.csv", ["n_train", "error_full", "error_reduced"],
                            [(str(n), ef, er) for n, ef, er in gpr_rows])
    except PipelineError as exc:
        _mark_failure(out, exc)
        raise
    return np.array(dmd_rows, dtype=float), np.array(gpr_rows, dtype=float)


def wing_points(profile: AirfoilProfile, chord: float = 1.0, leading_edge=(0.0, 0.0)) -> np.ndarray:
    """Upper surface LE->TE then lower surface, with shared points listed once."""
    le = np.asarray(leading_edge, dtype=float)
    upper = np.column_stack([profile.stations, profile.y_upper]) * chord + le
    lower = np.column_stack([profile.stations, profile.y_lower]) * chord + le
    same = (profile.y_upper == profile.y_lower)
    return np.vstack([upper, lower[~same]])


def wing_displacements(points, ref: AirfoilProfile, mu, basis, chord: float = 1.0,
                       leading_edge=(0.0, 0.0)) -> np.ndarray:
    """Displacement of wing points lying on ``ref`` under the bump deformation.

    A point belongs to the upper surface when it lies on or above the
    reference camber line.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    le = np.asarray(leading_edge, dtype=float)
    x = (pts[:, 0] - le[0]) / chord
    y = (pts[:, 1] - le[1]) / chord
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise InputError("wing points must lie on the chord span")
    x = np.clip(x, 0.0, 1.0)
    mu = np.asarray(mu, dtype=float)
    n = basis.size
    r = basis.evaluate(x)
    upper = y >= np.interp(x, ref.stations, ref.camber)
    dy = np.where(upper, mu[:n] @ r, -(mu[n:] @ r))
    return np.column_stack([np.zeros_like(dy), dy * chord])


def deform_and_morph(config: PipelineConfig, mu, out_dir=None, write: bool = True):
    """Deform the reference section by ``mu`` and morph the reference mesh.

    The mesh comes from ``geometry.mesh`` when set, otherwise a synthetic
    ring mesh around the reference wing is generated.
    """
    geo = config.geometry
    dom = config.domain.build()
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (dom.dimension,) or not dom.contains(mu):
        raise InputError("parameter vector must lie inside the configured domain")
    basis = geo.basis()
    ref = naca4_profile(geo.naca, geo.n_points, geo.closed_te)
    deformed = deform_profile(ref, mu, basis)
    if geo.mesh:
        mesh = read_mesh_csv(geo.mesh)
    else:
        mesh = reference_mesh(wing_points(ref, geo.chord, geo.leading_edge), geo.focal(),
                              geo.outer_radius, geo.n_rings, geo.n_theta)
    centers = mesh.points("wing")
    disp = wing_displacements(centers, ref, mu, basis, geo.chord, geo.leading_edge)
    model = fit_rbf(centers, disp, geo.kernel_radius)
    morphed = morph_mesh(mesh, model, geo.cutoff())
    if write:
        out = Path(out_dir or config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_profile_csv(ref, out / "profile_reference.csv")
        write_profile_csv(deformed, out / "profile_deformed.csv")
        write_mesh_csv(mesh, out / "mesh_reference.csv")
        write_mesh_csv(morphed, out / "mesh_morphed.csv")
    return deformed, morphed


__all__ = [
    "PipelineReport",
    "PointSet2D",
    "deform_and_morph",
    "mean_relative_error",
    "relative_error",
    "run_dyas",
    "run_pipeline",
    "sample_parameters",
    "sensitivity_sweeps",
    "window_times",
]
