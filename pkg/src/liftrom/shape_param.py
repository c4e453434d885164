"""NACA 4-digit reference sections and Hicks-Henne bump deformation.

The deformation acts on ordinates only, at fixed chordwise stations::

    y_upper = y_upper_ref + sum_i c_i r_i(x)
    y_lower = y_lower_ref - sum_i d_i r_i(x)

with the parameter vector laid out as ``(c_1..c_5, d_1..d_5)``.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GeometryError, InputError

DEFAULT_PEAKS = (0.1, 0.3, 0.5, 0.7, 0.9)
DEFAULT_EXPONENT = 3.0
PARAMETER_NAMES = tuple([f"c{i}" for i in range(1, 6)] + [f"d{i}" for i in range(1, 6)])

_THICKNESS_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843)
_TE_COEFF_OPEN = -0.1015
_TE_COEFF_CLOSED = -0.1036


@dataclass(frozen=True)
class AirfoilProfile:
    """Upper/lower ordinates on shared chordwise stations (chord fractions)."""

    stations: np.ndarray
    y_upper: np.ndarray
    y_lower: np.ndarray

    def __post_init__(self):
        for name in ("stations", "y_upper", "y_lower"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        x = self.stations
        if x.ndim != 1 or x.size < 2:
            raise InputError("stations must be a 1-D array with at least 2 entries")
        if self.y_upper.shape != x.shape or self.y_lower.shape != x.shape:
            raise InputError("ordinate arrays must match the station count")
        if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
            raise InputError("stations must increase strictly from 0 to 1")
        bad = np.flatnonzero(self.y_upper < self.y_lower)
        if bad.size:
            raise GeometryError(
                f"upper surface below lower surface at x={x[bad[0]]:.6g} "
                f"({bad.size} stations)"
            )

    @property
    def thickness(self) -> np.ndarray:
        return self.y_upper - self.y_lower

    @property
    def camber(self) -> np.ndarray:
        return 0.5 * (self.y_upper + self.y_lower)

    def equals(self, other: "AirfoilProfile") -> bool:
        return (
            np.array_equal(self.stations, other.stations)
            and np.array_equal(self.y_upper, other.y_upper)
            and np.array_equal(self.y_lower, other.y_lower)
        )


@dataclass(frozen=True)
class BumpBasis:
    """Five Hicks-Henne sine-power bumps ``r_i(x) = sin^e(pi x^m_i)``.

    ``m_i = ln(0.5) / ln(p_i)`` places the unit peak of bump ``i`` at ``p_i``.
    """

    peak_locations: tuple = DEFAULT_PEAKS
    exponent: float = DEFAULT_EXPONENT
    _powers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        peaks = np.asarray(self.peak_locations, dtype=float)
        if peaks.ndim != 1 or peaks.size == 0:
            raise InputError("peak_locations must be a non-empty sequence")
        if np.any(peaks <= 0) or np.any(peaks >= 1) or np.any(np.diff(peaks) <= 0):
            raise InputError("peak_locations must be strictly increasing inside (0, 1)")
        if not self.exponent > 0:
            raise InputError("exponent must be positive")
        object.__setattr__(self, "peak_locations", tuple(float(p) for p in peaks))
        object.__setattr__(self, "_powers", np.log(0.5) / np.log(peaks))

    @property
    def size(self) -> int:
        return len(self.peak_locations)

    def evaluate(self, x) -> np.ndarray:
        """All bumps at ``x``; returns shape ``(size, len(x))``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0) or np.any(x > 1):
            raise InputError("bump abscissae must lie in [0, 1]")
        vals = np.sin(np.pi * x[None, :] ** self._powers[:, None]) ** self.exponent
        # sin(pi) is not exactly zero in floating point
        vals[:, x == 1.0] = 0.0
        return np.clip(vals, 0.0, 1.0)


def bump_value(basis: BumpBasis, i: int, x):
    """Value of the ``i``-th bump (1-based) at chord fraction ``x``."""
    if not 1 <= i <= basis.size:
        raise InputError(f"bump index {i} outside 1..{basis.size}")
    out = basis.evaluate(x)[i - 1]
    return float(out[0]) if np.ndim(x) == 0 else out


def cosine_stations(n_points: int) -> np.ndarray:
    beta = np.linspace(0.0, np.pi, n_points)
    x = 0.5 * (1.0 - np.cos(beta))
    x[0], x[-1] = 0.0, 1.0
    return x


def naca4_thickness(x, thickness: float, closed_te: bool = True) -> np.ndarray:
    """Half-thickness distribution of a 4-digit section."""
    x = np.asarray(x, dtype=float)
    a0, a1, a2, a3 = _THICKNESS_COEFFS
    a4 = _TE_COEFF_CLOSED if closed_te else _TE_COEFF_OPEN
    return 5.0 * thickness * (a0 * np.sqrt(x) + a1 * x + a2 * x**2 + a3 * x**3 + a4 * x**4)


def naca4_camber(x, max_camber: float, camber_pos: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if max_camber == 0.0 or camber_pos == 0.0:
        return np.zeros_like(x)
    m, p = max_camber, camber_pos
    fore = m / p**2 * (2 * p * x - x**2)
    aft = m / (1 - p) ** 2 * ((1 - 2 * p) + 2 * p * x - x**2)
    return np.where(x < p, fore, aft)


def naca4_profile(code: str = "4412", n_points: int = 200, closed_te: bool = True) -> AirfoilProfile:
    """Sample a NACA 4-digit section on cosine-spaced stations.

    Ordinates are built normal to the chord: ``y = camber +/- half_thickness``.
    """
    if not isinstance(code, str) or not re.fullmatch(r"\d{4}", code):
        raise InputError(f"NACA code must be 4 decimal digits, got {code!r}")
    if n_points < 3:
        raise InputError("n_points must be at least 3")
    m = int(code[0]) / 100.0
    p = int(code[1]) / 10.0
    t = int(code[2:]) / 100.0
    x = cosine_stations(n_points)
    yt = naca4_thickness(x, t, closed_te)
    if closed_te:
        yt[-1] = 0.0
    yc = naca4_camber(x, m, p)
    return AirfoilProfile(x, yc + yt, yc - yt)


def deform_profile(ref: AirfoilProfile, mu, basis: BumpBasis | None = None) -> AirfoilProfile:
    """Apply the bump deformation weighted by ``mu = (c_1..c_n, d_1..d_n)``."""
    basis = basis or BumpBasis()
    mu = np.asarray(mu, dtype=float)
    n = basis.size
    if mu.shape != (2 * n,):
        raise InputError(f"parameter vector must have length {2 * n}, got {mu.shape}")
    if not np.all(np.isfinite(mu)):
        raise InputError("parameter vector contains non-finite entries")
    r = basis.evaluate(ref.stations)
    c, d = mu[:n], mu[n:]
    return AirfoilProfile(ref.stations, ref.y_upper + c @ r, ref.y_lower - d @ r)


def write_profile_csv(profile: AirfoilProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["station", "y_upper", "y_lower"])
        for x, yu, yl in zip(profile.stations, profile.y_upper, profile.y_lower):
            writer.writerow([repr(float(x)), repr(float(yu)), repr(float(yl))])


def read_profile_csv(path) -> AirfoilProfile:
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["station", "y_upper", "y_lower"]:
            raise InputError(f"unexpected profile header {header!r}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, 3)
    return AirfoilProfile(data[:, 0], data[:, 1], data[:, 2])
