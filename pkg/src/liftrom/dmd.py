"""Exact dynamic mode decomposition of a parametric lift ensemble.

The state at each instant is the vector of lift values over all parameter
samples; the best-fit operator between consecutive states is approximated on
the leading left-singular vectors of the snapshot matrix and used to forecast
future states.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDataError, InputError

_TIME_TOL = 1e-9
_ZERO_EIG = 1e-10


@dataclass(frozen=True)
class SnapshotEnsemble:
    """Lift values ``values[i, j]`` for sample ``i`` at instant ``times[j]``."""

    values: np.ndarray
    times: np.ndarray
    dt: float
    sample_ids: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        times = np.array(self.times, dtype=float).reshape(-1)
        if values.ndim != 2:
            raise InputError("ensemble values must be a 2-D (samples x instants) array")
        ns, m = values.shape
        if ns < 1 or m < 2:
            raise InputError(f"need at least 1 sample and 2 instants, got {values.shape}")
        if times.shape != (m,):
            raise InputError("one time per ensemble column is required")
        if not self.dt > 0:
            raise InputError("dt must be positive")
        if np.max(np.abs(np.diff(times) - self.dt)) > _TIME_TOL * self.dt:
            raise InputError("ensemble times are not equispaced with period dt")
        ids = tuple(str(s) for s in self.sample_ids)
        if len(ids) != ns:
            raise InputError("one sample id per row is required")
        values.setflags(write=False)
        times.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "sample_ids", ids)

    @classmethod
    def from_grid(cls, values, times, sample_ids=None):
        times = np.asarray(times, dtype=float)
        dt = float((times[-1] - times[0]) / (len(times) - 1)) if len(times) > 1 else 1.0
        if sample_ids is None:
            sample_ids = [f"s{i:03d}" for i in range(np.shape(values)[0])]
        return cls(values, times, dt, tuple(sample_ids))

    @property
    def shape(self):
        return self.values.shape

    def subsample(self, step: int) -> "SnapshotEnsemble":
        """Every ``step``-th instant, keeping the last one."""
        idx = np.arange(self.values.shape[1] - 1, -1, -step)[::-1]
        return SnapshotEnsemble(self.values[:, idx], self.times[idx], self.dt * step, self.sample_ids)


@dataclass(frozen=True)
class RankSpec:
    mode: str = "energy"
    value: float = 1.0 - 1e-6

    def __post_init__(self):
        if self.mode == "fixed":
            if int(self.value) != self.value or self.value < 1:
                raise InputError("fixed rank must be a positive integer")
        elif self.mode == "energy":
            if not 0 < self.value <= 1:
                raise InputError("energy fraction must lie in (0, 1]")
        else:
            raise InputError(f"unknown rank mode {self.mode!r}")

    @classmethod
    def fixed(cls, r: int) -> "RankSpec":
        return cls("fixed", int(r))

    @classmethod
    def energy(cls, fraction: float) -> "RankSpec":
        return cls("energy", float(fraction))


def build_snapshot_matrices(ens: SnapshotEnsemble):
    v = ens.values
    if v.shape[1] < 2:
        raise InputError("at least two snapshots are required")
    return v[:, :-1], v[:, 1:]


def _numerical_rank(s: np.ndarray, shape) -> int:
    tol = np.finfo(float).eps * s[0] * max(shape)
    return int(np.count_nonzero(s > tol))


def select_rank(singular_values, spec: RankSpec, shape=None) -> int:
    """Truncation rank from descending singular values.

    ``shape`` (the snapshot matrix shape) sets the tolerance below which
    singular values count as zero; defaults to the number of values.
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or not s[0] > 0:
        raise DegenerateDataError("all singular values are zero")
    shape = shape or (s.size, s.size)
    numerical = _numerical_rank(s, shape)
    if spec.mode == "fixed":
        return max(1, min(int(spec.value), numerical))
    energy = np.cumsum(s**2) / np.sum(s**2)
    # guard the comparison against round-off in the cumulative sum
    r = int(np.searchsorted(energy, spec.value - 1e-15 * spec.value, side="left")) + 1
    return max(1, min(r, numerical))


@dataclass(frozen=True)
class DmdModel:
    rank: int
    eigenvalues: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    dt: float
    t0: float
    singular_values: np.ndarray | None = None

    def _powers(self, steps: np.ndarray) -> np.ndarray:
        lam = self.eigenvalues.astype(complex)
        out = np.empty((lam.size, steps.size), dtype=complex)
        nz = lam != 0
        out[nz] = np.exp(np.outer(np.log(lam[nz]), steps))
        out[~nz] = (steps == 0).astype(float)
        return out

    def forecast(self, t):
        return forecast(self, t)

    def to_dict(self) -> dict:
        def pairs(a):
            a = np.asarray(a).reshape(-1)
            return [[float(z.real), float(z.imag)] for z in a]

        return {
            "rank": int(self.rank),
            "dt": self.dt,
            "t0": self.t0,
            "eigenvalues": pairs(self.eigenvalues),
            "modes": [pairs(row) for row in self.modes],
            "amplitudes": pairs(self.amplitudes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DmdModel":
        def cplx(pairs):
            a = np.asarray(pairs, dtype=float)
            return a[..., 0] + 1j * a[..., 1]

        try:
            model = cls(
                rank=int(data["rank"]),
                eigenvalues=cplx(data["eigenvalues"]).reshape(-1),
                modes=cplx(data["modes"]).reshape(-1, len(data["eigenvalues"])),
                amplitudes=cplx(data["amplitudes"]).reshape(-1),
                dt=float(data["dt"]),
                t0=float(data["t0"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed DMD model: {exc}") from exc
        if model.eigenvalues.size != model.rank or model.amplitudes.size != model.rank:
            raise InputError("DMD model rank does not match stored eigenpairs")
        return model

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "DmdModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_dmd(ens: SnapshotEnsemble, spec: RankSpec | None = None) -> DmdModel:
    """Exact DMD with modes ``Phi = Y V S^-1 W`` and least-squares amplitudes."""
    spec = spec or RankSpec()
    if not np.all(np.isfinite(ens.values)):
        raise InputError("ensemble contains non-finite values")
    X, Y = build_snapshot_matrices(ens)
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    r = select_rank(s, spec, X.shape)
    Ur, sr, Vr = U[:, :r], s[:r], Vh[:r].conj().T
    YV = (Y @ Vr) / sr
    atilde = Ur.conj().T @ YV
    lam, W = np.linalg.eig(atilde)
    # eig returns a real dtype when the spectrum is real; powers need the complex log
    lam, W = lam.astype(complex), W.astype(complex)
    modes = YV @ W
    # exact modes are only defined for nonzero eigenvalues; a zero eigenvalue
    # gets its projected mode, which carries the first snapshot's component
    # outside the operator's range and vanishes after one step
    zero = np.abs(lam) <= _ZERO_EIG * np.max(np.abs(lam))
    if np.any(zero):
        lam[zero] = 0.0
        modes[:, zero] = Ur @ W[:, zero]
    b = np.linalg.lstsq(modes, X[:, 0].astype(complex), rcond=None)[0]
    return DmdModel(r, lam, modes, b, ens.dt, float(ens.times[0]), s)


def forecast(model: DmdModel, t):
    """Real state at time(s) ``t >= t0`` using ``lambda^((t - t0)/dt)``.

    Scalar ``t`` gives a vector over samples; an array gives
    ``(n_samples, len(t))``.
    """
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    steps = (times - model.t0) / model.dt
    if np.any(steps < -1e-9):
        raise InputError(f"cannot forecast before t0={model.t0}")
    steps = np.maximum(steps, 0.0)
    states = model.modes @ (model.amplitudes[:, None] * model._powers(steps))
    real = states.real
    return real[:, 0] if scalar else real


def reconstruction_error(model: DmdModel, ens: SnapshotEnsemble) -> float:
    """Relative Frobenius error over the training instants."""
    approx = forecast(model, ens.times)
    return float(np.linalg.norm(ens.values - approx) / np.linalg.norm(ens.values))


def projection_error(ens: SnapshotEnsemble, rank: int) -> float:
    """Relative error of projecting the snapshots onto the leading ``rank`` POD modes.

    This is the quantity that truncation minimizes, so it never increases with
    ``rank``; the DMD time reconstruction carries no such guarantee.
    """
    X, _ = build_snapshot_matrices(ens)
    U = np.linalg.svd(X, full_matrices=False)[0][:, :rank]
    return float(np.linalg.norm(X - U @ (U.T @ X)) / np.linalg.norm(X))


def write_ensemble_csv(ens: SnapshotEnsemble, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *ens.sample_ids])
        for j, t in enumerate(ens.times):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in ens.values[:, j])])


def read_ensemble_csv(path) -> SnapshotEnsemble:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t" or len(header) < 2:
            raise InputError(f"unexpected ensemble header {header!r}")
        rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    if rows.ndim != 2 or rows.shape[0] < 2:
        raise InputError("ensemble file needs at least two instants")
    return SnapshotEnsemble.from_grid(rows[:, 1:].T, rows[:, 0], header[1:])


def write_forecast_csv(model: DmdModel, times: Sequence[float], sample_ids, path) -> None:
    states = forecast(model, np.asarray(times, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *sample_ids])
        for j, t in enumerate(times):
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in states[:, j])])
