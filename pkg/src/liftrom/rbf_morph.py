"""RBF mesh morphing with a Wendland C2 kernel and linear polynomial term.

The displacement field is

    s(x) = sum_i beta_i xi(||x - x_i||) + delta_0 + delta_1 x + delta_2 y

fitted so that ``s(x_i) = d_i`` at the wing control points, together with the
side constraint ``sum_i beta_i q(x_i) = 0``.  Away from the wing the field is
blended to zero with a focal-point cutoff so the outer boundary stays put.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.spatial.distance import cdist

from .errors import FitError, InputError, MorphConfigError

TAGS = ("wing", "outer", "interior")
_EVAL_CHUNK = 4096


def wendland_c2(r, radius: float):
    """Wendland C2 kernel ``(1 - r/rho)^4 (4 r/rho + 1)`` with compact support ``rho``."""
    if not radius > 0:
        raise InputError("kernel radius must be positive")
    q = np.asarray(r, dtype=float) / radius
    out = np.where(q < 1.0, (1.0 - q) ** 4 * (4.0 * q + 1.0), 0.0)
    return float(out) if out.ndim == 0 else out


def _poly_matrix(points: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(points)), points])


@dataclass(frozen=True)
class PointSet2D:
    """Mesh points with a per-point boundary tag."""

    coordinates: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coordinates, dtype=float).reshape(-1, 2)
        tags = np.array(self.tags, dtype=object).reshape(-1)
        if len(tags) != len(coords):
            raise InputError("one tag per point is required")
        unknown = set(tags) - set(TAGS)
        if unknown:
            raise InputError(f"unknown point tags {sorted(unknown)}")
        coords.setflags(write=False)
        tags.setflags(write=False)
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "tags", tags)

    def __len__(self):
        return len(self.coordinates)

    def mask(self, tag: str) -> np.ndarray:
        return self.tags == tag

    def points(self, tag: str) -> np.ndarray:
        return self.coordinates[self.mask(tag)]


@dataclass(frozen=True)
class CutoffConfig:
    focal_point: tuple = (0.5, 0.0)
    r_inner: float = 1.5
    r_out: float = 7.0

    def __post_init__(self):
        if not 0 < self.r_inner < self.r_out:
            raise InputError("cutoff radii must satisfy 0 < r_inner < r_out")

    def blend(self, distance):
        """C1 smoothstep: 1 inside ``r_inner``, 0 beyond ``r_out``."""
        d = np.asarray(distance, dtype=float)
        u = np.clip((d - self.r_inner) / (self.r_out - self.r_inner), 0.0, 1.0)
        psi = 1.0 - 3.0 * u**2 + 2.0 * u**3
        psi = np.where(d <= self.r_inner, 1.0, psi)
        return np.where(d >= self.r_out, 0.0, psi)


@dataclass(frozen=True)
class RbfModel:
    centers: np.ndarray
    beta: np.ndarray
    delta: np.ndarray
    kernel_radius: float
    displacements: np.ndarray

    def evaluate(self, queries) -> np.ndarray:
        return evaluate_rbf(self, queries)

    def polynomial(self, queries) -> np.ndarray:
        q = np.asarray(queries, dtype=float).reshape(-1, 2)
        return _poly_matrix(q) @ self.delta

    def interpolation_residual(self) -> float:
        return float(np.max(np.abs(self.evaluate(self.centers) - self.displacements)))

    def side_constraint_residual(self) -> float:
        return float(np.max(np.abs(_poly_matrix(self.centers).T @ self.beta)))


def fit_rbf(centers, displacements, kernel_radius: float = 0.1) -> RbfModel:
    """Solve the saddle-point system for both displacement components at once.

    Raises
    ------
    FitError
        If centers coincide, are collinear, or the system is numerically
        singular.
    """
    x = np.array(centers, dtype=float).reshape(-1, 2)
    d = np.array(displacements, dtype=float).reshape(-1, 2)
    if len(x) != len(d):
        raise InputError("one displacement per center is required")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(d))):
        raise InputError("centers and displacements must be finite")
    n = len(x)
    if n < 3:
        raise FitError("at least 3 non-collinear centers are required")
    if len(np.unique(x, axis=0)) != n:
        raise FitError("coincident RBF centers make the system singular")
    P = _poly_matrix(x)
    A = np.zeros((n + 3, n + 3))
    A[:n, :n] = wendland_c2(cdist(x, x), kernel_radius)
    A[:n, n:] = P
    A[n:, :n] = P.T
    if np.linalg.matrix_rank(P) < 3:
        raise FitError(f"collinear centers: condition number ~{np.linalg.cond(A):.3e}")
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = d
    lu = lu_factor(A, check_finite=False)
    sol = lu_solve(lu, rhs)
    # one step of iterative refinement tightens the interpolation residual
    sol += lu_solve(lu, rhs - A @ sol)
    if not np.all(np.isfinite(sol)):
        raise FitError(f"singular RBF system: condition number ~{np.linalg.cond(A):.3e}")
    model = RbfModel(x, sol[:n], sol[n:], float(kernel_radius), d)
    resid = model.interpolation_residual()
    if resid > 1e-9 * max(1.0, float(np.max(np.abs(d), initial=0.0))):
        raise FitError(
            f"ill-conditioned RBF system (residual {resid:.3e}, "
            f"condition number ~{np.linalg.cond(A):.3e})"
        )
    return model


def evaluate_rbf(model: RbfModel, queries) -> np.ndarray:
    q = np.asarray(queries.coordinates if isinstance(queries, PointSet2D) else queries, dtype=float)
    q = q.reshape(-1, 2)
    out = _poly_matrix(q) @ model.delta
    for start in range(0, len(q), _EVAL_CHUNK):
        block = q[start:start + _EVAL_CHUNK]
        phi = wendland_c2(cdist(block, model.centers), model.kernel_radius)
        out[start:start + _EVAL_CHUNK] += phi @ model.beta
    return out


def morph_mesh(mesh: PointSet2D, model: RbfModel, cutoff: CutoffConfig | None = None) -> PointSet2D:
    """Move interior points by ``psi(|x - focal|) s(x)``.

    Wing points get their prescribed displacement exactly and outer points are
    pinned.  Tags and row order are preserved.
    """
    cutoff = cutoff or CutoffConfig()
    coords = mesh.coordinates
    focal = np.asarray(cutoff.focal_point, dtype=float)
    dist = np.linalg.norm(coords - focal, axis=1)
    wing = mesh.mask("wing")
    interior = mesh.mask("interior")

    if np.any(dist[wing] > cutoff.r_inner):
        worst = float(dist[wing].max())
        raise MorphConfigError(
            f"wing point at distance {worst:.4g} m from the focal point lies outside "
            f"r_inner={cutoff.r_inner} m"
        )
    lookup = {tuple(c): i for i, c in enumerate(model.centers)}
    new = coords.copy()
    for idx in np.flatnonzero(wing):
        j = lookup.get(tuple(coords[idx]))
        if j is None:
            raise MorphConfigError(f"wing point {coords[idx].tolist()} is not an RBF center")
        new[idx] = coords[idx] + model.displacements[j]

    idx = np.flatnonzero(interior & (dist < cutoff.r_out))
    if idx.size:
        psi = cutoff.blend(dist[idx])
        new[idx] = coords[idx] + psi[:, None] * evaluate_rbf(model, coords[idx])
    return PointSet2D(new, mesh.tags)


def reference_mesh(
    wing_points,
    focal_point=(0.5, 0.0),
    outer_radius: float = 10.0,
    n_rings: int = 40,
    n_theta: int = 120,
    r_min: float = 0.6,
) -> PointSet2D:
    """Synthetic point cloud around a wing: polar rings plus an outer circle.

    Ring radii are geometrically spaced from ``r_min`` to just inside
    ``outer_radius``; the outer boundary is a circle of ``n_theta`` points.
    """
    wing = np.asarray(wing_points, dtype=float).reshape(-1, 2)
    focal = np.asarray(focal_point, dtype=float)
    theta = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    ring_dirs = np.column_stack([np.cos(theta), np.sin(theta)])
    radii = np.geomspace(r_min, 0.97 * outer_radius, n_rings)
    interior = (focal + radii[:, None, None] * ring_dirs[None]).reshape(-1, 2)
    outer = focal + outer_radius * ring_dirs
    coords = np.vstack([wing, interior, outer])
    tags = ["wing"] * len(wing) + ["interior"] * len(interior) + ["outer"] * len(outer)
    return PointSet2D(coords, tags)


def write_mesh_csv(mesh: PointSet2D, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "tag"])
        for (x, y), tag in zip(mesh.coordinates, mesh.tags):
            writer.writerow([repr(float(x)), repr(float(y)), tag])


def read_mesh_csv(path) -> PointSet2D:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["x", "y", "tag"]:
            raise InputError(f"unexpected mesh header {header!r}")
        rows = [row for row in reader if row]
    coords = np.array([[float(r[0]), float(r[1])] for r in rows], dtype=float).reshape(-1, 2)
    return PointSet2D(coords, [r[2] for r in rows])
