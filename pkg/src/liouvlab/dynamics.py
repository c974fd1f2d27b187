"""Propagators, piecewise time-ordered evolution, and generator extraction.

The propagator of a constant generator L over time t is the matrix
exponential P(t) = exp(L t); a time-dependent generator is handled by a
time-ordered product of per-interval exponentials, with the generator
sampled at each interval midpoint for second-order accuracy.  The inverse
operation -- recovering L from a measured propagator -- is the principal
matrix logarithm, well-defined only while all rotation angles stay below
pi; proximity to that branch cut is surfaced as an explicit error.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .basis import BlochVector, _frozen_array
from .exceptions import (
    BranchCutError,
    DimensionError,
    PhysicalityWarning,
    SingularProcessError,
)
from .superop import Superoperator

__all__ = [
    "ProcessMatrix",
    "TimeGrid",
    "propagator",
    "piecewise_propagator",
    "evolve",
    "principal_log",
]

BRANCH_TOL = 1e-6  # radians from the negative real axis
SPECTRAL_RADIUS_SLACK = 1e-6


@dataclass(frozen=True)
class ProcessMatrix:
    """Propagator in the Bloch frame: |rho(t)>> = matrix |rho(0)>>."""

    dim: int
    matrix: NDArray[np.float64]
    duration_s: float

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = self.dim * self.dim
        if m.shape != (n, n):
            raise DimensionError(f"expected a {n}x{n} matrix, got shape {m.shape}")
        object.__setattr__(self, "matrix", _frozen_array(m))

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.matrix)).max())

    def to_json(self) -> dict:
        return {"dim": self.dim, "matrix": self.matrix.tolist(), "duration_s": self.duration_s}

    @classmethod
    def from_json(cls, obj: dict) -> "ProcessMatrix":
        return cls(
            dim=int(obj["dim"]),
            matrix=np.asarray(obj["matrix"], dtype=float),
            duration_s=float(obj["duration_s"]),
        )


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing measurement times (seconds), starting after 0.

    The grid implies len(times) evolution intervals with boundaries
    [0, t_1, ..., t_N]; ``step`` is the common spacing of a uniform grid
    (None otherwise).
    """

    times: NDArray[np.float64]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise DimensionError("time grid must be a non-empty 1-d array")
        if t[0] <= 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing and positive")
        object.__setattr__(self, "times", _frozen_array(t))

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], self.times])

    @property
    def n_intervals(self) -> int:
        return self.times.size

    @property
    def durations(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def midpoints(self) -> np.ndarray:
        b = self.boundaries
        return 0.5 * (b[:-1] + b[1:])

    @property
    def step(self) -> float | None:
        d = self.durations
        if np.all(np.abs(d - d[0]) < 1e-12):
            return float(d[0])
        return None

    @classmethod
    def uniform(cls, step: float, n: int) -> "TimeGrid":
        return cls(times=step * np.arange(1, n + 1))

    def to_json(self) -> dict:
        return {"times_s": self.times.tolist()}


def _check_physical(pm: ProcessMatrix):
    radius = pm.spectral_radius()
    if radius > 1.0 + SPECTRAL_RADIUS_SLACK:
        warnings.warn(
            f"process matrix has spectral radius {radius:.6f} > 1; "
            "keeping it as-is (physicality is checked, not enforced)",
            PhysicalityWarning,
            stacklevel=3,
        )


def propagator(liouvillian: Superoperator, t: float) -> ProcessMatrix:
    """exp(L t) via scaling-and-squaring Pade approximation.

    Raises:
        ValueError: for negative times or non-finite generator entries.
    """
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    if not np.all(np.isfinite(liouvillian.matrix)):
        raise ValueError("generator has non-finite entries")
    pm = ProcessMatrix(
        dim=liouvillian.dim,
        matrix=scipy.linalg.expm(liouvillian.matrix * t),
        duration_s=float(t),
    )
    _check_physical(pm)
    return pm


def piecewise_propagator(
    liouvillians: Sequence[Superoperator], grid: TimeGrid
) -> ProcessMatrix:
    """Time-ordered product of per-interval propagators.

    ``liouvillians[k]`` acts on the k-th interval of the grid; later factors
    multiply on the left, so the result maps the state at time 0 to the
    state at the final grid time.

    Raises:
        DimensionError: if the number of generators does not match the
            number of grid intervals.
    """
    if len(liouvillians) != grid.n_intervals:
        raise DimensionError(
            f"{len(liouvillians)} generators for {grid.n_intervals} grid intervals"
        )
    dim = liouvillians[0].dim
    total = np.eye(dim * dim)
    for l, dt in zip(liouvillians, grid.durations):
        if l.dim != dim:
            raise DimensionError("generators have mixed dimensions")
        total = scipy.linalg.expm(l.matrix * dt) @ total
    pm = ProcessMatrix(dim=dim, matrix=total, duration_s=float(grid.times[-1]))
    _check_physical(pm)
    return pm


def evolve(v: BlochVector, p: ProcessMatrix) -> BlochVector:
    """Apply a process matrix to a Bloch vector."""
    if v.dim != p.dim:
        raise DimensionError(f"state dim {v.dim} != process dim {p.dim}")
    return BlochVector(dim=v.dim, coords=p.matrix @ v.coords)


def principal_log(p: ProcessMatrix) -> Superoperator:
    """Real principal matrix logarithm of a process matrix.

    Dividing the result by ``p.duration_s`` yields the generator estimate.
    Eigenvalues are screened first so branch ambiguity surfaces as an error
    instead of a silently wrong sheet.  When the matrix is safely
    diagonalizable (eigenvector condition below 1e6 and a faithful
    reconstruction residual) the log is taken on the eigendecomposition,
    which is bit-reproducible across runs; otherwise it falls back to the
    inverse scaling-and-squaring algorithm on the Schur form.

    Raises:
        SingularProcessError: if the process matrix is numerically singular.
        BranchCutError: if an eigenvalue lies within BRANCH_TOL radians of
            the negative real axis; reduce the evolution time so that
            |Omega * t| stays below pi.
    """
    eigs, vecs = np.linalg.eig(p.matrix)
    scale = np.abs(eigs).max()
    if scale == 0 or np.abs(eigs).min() < 1e-12 * scale:
        raise SingularProcessError(
            "process matrix is singular; the generator cannot be recovered"
        )
    angles = np.abs(np.angle(eigs))
    worst = float((np.pi - angles).min())
    if worst < BRANCH_TOL:
        raise BranchCutError(
            f"eigenvalue within {worst:.2e} rad of the branch cut; reduce the "
            "evolution time so rotation angles stay below pi"
        )
    log = None
    if np.linalg.cond(vecs) < 1e6:
        candidate = np.linalg.solve(vecs.T, (vecs * np.log(eigs)).T).T
        rebuilt = np.linalg.solve(vecs.T, (vecs * eigs).T).T
        if np.abs(rebuilt - p.matrix).max() < 1e-11 * max(1.0, scale):
            log = candidate
    if log is None:
        log = scipy.linalg.logm(p.matrix)
    if np.iscomplexobj(log):
        resid = np.abs(log.imag).max()
        if resid > 1e-9 * max(1.0, np.abs(log.real).max()):
            raise BranchCutError(
                f"matrix logarithm has imaginary residue {resid:.3e}; the "
                "principal branch is not real here"
            )
        log = np.ascontiguousarray(log.real)
    return Superoperator(dim=p.dim, matrix=log)
