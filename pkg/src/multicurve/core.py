"""Foundational geometric and configuration types shared by every module.

Points are plain float64 coordinate arrays of length 2 or 3; a PointSet
wraps an (n, dim) array and enforces the invariants every downstream
consumer relies on (finite values, uniform dimension).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

SUPPORTED_DIMENSIONS = (2, 3)

# Relative factor applied to the bounding-box diagonal when deduplicating
# loaded data; keeps the closest-pair distance strictly positive.
DEDUPE_DIAGONAL_FACTOR = 1e-9


class FitError(Exception):
    """Base class for errors raised by this package."""


class UsageError(FitError):
    """A caller violated an API contract (wrong dimension, bad argument)."""


class ConfigError(FitError):
    """A configuration value is out of its documented range."""


class InsufficientDataError(FitError):
    """Too few (distinct) data points to proceed."""


class DegenerateModelError(FitError):
    """Model parameters describe a degenerate curve (zero length or scale)."""


class ParseError(FitError):
    """A data file could not be parsed; carries the offending line number."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = f"{path}:{line}: " if path and line else ""
        super().__init__(prefix + message)


def as_coords(points: "PointSet | np.ndarray | Sequence", dim: int | None = None) -> np.ndarray:
    """Coerce a PointSet or array-like to a validated (n, dim) float64 array."""
    if isinstance(points, PointSet):
        coords = points.coords
    else:
        coords = np.asarray(points, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(1, -1)
    if coords.ndim != 2 or coords.shape[1] not in SUPPORTED_DIMENSIONS:
        raise UsageError(f"expected an (n, 2) or (n, 3) coordinate array, got shape {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise UsageError("coordinates must be finite")
    if dim is not None and coords.shape[1] != dim:
        raise UsageError(f"dimension mismatch: expected {dim}, got {coords.shape[1]}")
    return coords


@dataclass(frozen=True)
class PointSet:
    """An ordered, finite collection of same-dimension points.

    Immutable after construction; the coordinate array is set read-only so
    instances are safe to share across concurrent readers.
    """

    coords: np.ndarray
    resolution_hint: float | None = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] not in SUPPORTED_DIMENSIONS:
            raise UsageError(f"PointSet needs an (n, 2) or (n, 3) array, got shape {coords.shape}")
        if coords.shape[0] == 0:
            raise InsufficientDataError("PointSet must be non-empty")
        if not np.all(np.isfinite(coords)):
            raise UsageError("PointSet coordinates must be finite")
        if self.resolution_hint is not None and not self.resolution_hint > 0:
            raise UsageError("resolution_hint must be positive")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.coords.min(axis=0), self.coords.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))


def distance(a, b) -> float:
    """Euclidean distance between two points of the same dimension."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def dedupe(points: PointSet | np.ndarray, tol: float) -> PointSet:
    """Drop every point lying within ``tol`` of an earlier-kept point.

    Keeps first occurrences in input order; tol = 0 removes exact
    duplicates only.
    """
    if tol < 0:
        raise UsageError("tol must be nonnegative")
    coords = as_coords(points)
    hint = points.resolution_hint if isinstance(points, PointSet) else None
    if tol == 0.0:
        seen: set[tuple] = set()
        keep = np.zeros(len(coords), dtype=bool)
        for i, row in enumerate(coords):
            key = tuple(row)
            if key not in seen:
                seen.add(key)
                keep[i] = True
        return PointSet(coords[keep], resolution_hint=hint)

    # Grid hash with cell size tol: any point within tol of a kept point
    # lives in one of the 3^dim neighboring cells.
    dim = coords.shape[1]
    cells: dict[tuple, list[int]] = {}
    kept_rows: list[int] = []
    offsets = np.stack(np.meshgrid(*([[-1, 0, 1]] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    keys = np.floor(coords / tol).astype(np.int64)
    for i in range(len(coords)):
        key = keys[i]
        close = False
        for off in offsets:
            bucket = cells.get(tuple(key + off))
            if not bucket:
                continue
            deltas = coords[bucket] - coords[i]
            if np.any(np.einsum("ij,ij->i", deltas, deltas) <= tol * tol):
                close = True
                break
        if not close:
            cells.setdefault(tuple(key), []).append(i)
            kept_rows.append(i)
    return PointSet(coords[kept_rows], resolution_hint=hint)


def dedupe_tolerance(points: PointSet | np.ndarray) -> float:
    """Default dedupe tolerance: a tiny fraction of the bounding-box diagonal."""
    coords = as_coords(points)
    diag = float(np.linalg.norm(coords.max(axis=0) - coords.min(axis=0)))
    return DEDUPE_DIAGONAL_FACTOR * diag


def closest_pair_distance(points: PointSet | np.ndarray) -> float:
    """Distance between the closest pair of distinct points (exact, kd-tree)."""
    coords = as_coords(points)
    if len(coords) < 2:
        raise InsufficientDataError("closest pair needs at least 2 points")
    tree = cKDTree(coords)
    dists, _ = tree.query(coords, k=2)
    return float(dists[:, 1].min())


@dataclass(frozen=True)
class ParamBounds:
    """Per-component lower/upper box bounds for a parameter vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=np.float64)
        upper = np.array(self.upper, dtype=np.float64)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigError("lower and upper bounds must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigError("bounds must be finite")
        if not np.all(lower < upper):
            raise ConfigError("every lower bound must be strictly below its upper bound")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def __len__(self) -> int:
        return self.lower.shape[0]

    def clip(self, theta: np.ndarray) -> np.ndarray:
        return np.clip(theta, self.lower, self.upper)

    def contains(self, theta: np.ndarray) -> bool:
        theta = np.asarray(theta, dtype=np.float64)
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))


def validate_params(theta, n_params: int) -> np.ndarray:
    """Coerce a parameter vector to float64 and check length and finiteness."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (n_params,):
        raise UsageError(f"expected {n_params} parameters, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise UsageError("parameters must be finite")
    return theta


@dataclass(frozen=True)
class FitConfig:
    """Optimizer and estimator hyperparameters for one fitting run.

    coverage_exponent is the weight on the covered-data-fraction
    regularizer; resolution_factor multiplies the data resolution to get
    the model sampling resolution.
    """

    population: int = 25
    max_iterations: int = 2000
    discovery_rate: float = 0.25
    coverage_exponent: float = 1.0
    resolution_factor: float = 1.0
    instance_count: int = 1
    seed: int = 0
    early_stop_gain: float | None = None

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("population must be at least 2 (recombination needs distinct partners)")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be nonnegative")
        if not 0.0 < self.discovery_rate < 1.0:
            raise ConfigError("discovery_rate must lie in (0, 1)")
        if not self.coverage_exponent > 0:
            raise ConfigError("coverage_exponent must be positive")
        if not self.resolution_factor > 0:
            raise ConfigError("resolution_factor must be positive")
        if self.instance_count < 1:
            raise ConfigError("instance_count must be at least 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.early_stop_gain is not None and not 0.0 <= self.early_stop_gain < 1.0:
            raise ConfigError("early_stop_gain must lie in [0, 1)")

    def with_seed(self, seed: int) -> "FitConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "max_iterations": self.max_iterations,
            "discovery_rate": self.discovery_rate,
            "coverage_exponent": self.coverage_exponent,
            "resolution_factor": self.resolution_factor,
            "instance_count": self.instance_count,
            "early_stop_gain": self.early_stop_gain,
        }
