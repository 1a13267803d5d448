"""Signal model: array geometries, Fourier dictionaries, and multi-ray synthesis.

The observation model is ``y = A c + noise`` where the columns of ``A`` are
complex exponentials sampled at the occupied element positions of a (possibly
thinned) uniform grid.  Frequencies are normalized to cycles per grid step,
i.e. ``f`` lives in ``[0, 1)`` and grid column ``k`` carries ``f_k = k / n_grid``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class ArrayKind(str, enum.Enum):
    FULL = "full"
    SPA = "spa"
    CPA = "cpa"


@dataclass(frozen=True)
class Ray:
    """A single complex sinusoid.

    Parameters
    ----------
    freq : float
        Normalized spatial frequency in [0, 1), cycles per grid step.
    amp : float
        Nonnegative amplitude.
    phase : float
        Phase in radians; stored wrapped to [0, 2*pi).
    """

    freq: float
    amp: float
    phase: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.freq < 1.0:
            raise ValueError(f"freq must be in [0, 1), got {self.freq}")
        if self.amp < 0.0:
            raise ValueError(f"amp must be nonnegative, got {self.amp}")
        object.__setattr__(self, "phase", float(self.phase) % TWO_PI)

    @property
    def coefficient(self) -> complex:
        """Complex coefficient ``amp * exp(j*phase)``."""
        return self.amp * np.exp(1j * self.phase)


@dataclass(frozen=True)
class ArrayGeometry:
    """Occupied element positions on a uniform grid of size ``n_grid``."""

    n_grid: int
    indices: tuple
    kind: ArrayKind = ArrayKind.FULL

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=int)
        if idx.size < 1:
            raise ValueError("geometry needs at least one element")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.n_grid:
            raise ValueError("indices must lie in [0, n_grid)")
        object.__setattr__(self, "indices", tuple(int(i) for i in idx))

    @property
    def m(self) -> int:
        return len(self.indices)

    def index_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int)


class Dictionary:
    """Complex design matrix with one unit-magnitude exponential per grid bin.

    ``atoms[r, k] = exp(j * 2*pi * k * indices[r] / n_grid)``; every column has
    Euclidean norm ``sqrt(M)``.
    """

    def __init__(self, atoms: np.ndarray, geometry: ArrayGeometry):
        self.atoms = atoms
        self.geometry = geometry
        self.grid_freqs = np.arange(geometry.n_grid) / geometry.n_grid
        self._gram: Optional[np.ndarray] = None

    @property
    def shape(self):
        return self.atoms.shape

    @property
    def m(self) -> int:
        return self.atoms.shape[0]

    @property
    def n(self) -> int:
        return self.atoms.shape[1]

    def gram(self) -> np.ndarray:
        """Cached Hermitian Gram matrix ``A^H A`` (N x N)."""
        if self._gram is None:
            self._gram = self.atoms.conj().T @ self.atoms
        return self._gram

    def subset(self, columns: np.ndarray) -> "Dictionary":
        """Dictionary restricted to the given column indices (shares geometry)."""
        sub = Dictionary(self.atoms[:, columns], self.geometry)
        sub.grid_freqs = self.grid_freqs[columns]
        return sub


@dataclass
class Measurement:
    """Observed snapshot plus optional ground truth for scoring."""

    y: np.ndarray
    geometry: ArrayGeometry
    truth: Optional[tuple] = None
    noise_sigma_true: Optional[float] = None

    def __post_init__(self):
        if len(self.y) != self.geometry.m:
            raise ValueError("measurement length must match geometry element count")


def build_fourier_dictionary(geometry: ArrayGeometry) -> Dictionary:
    """Construct the Fourier dictionary for a geometry.

    Row ``r`` samples the exponentials at element position ``indices[r]``.
    """
    idx = geometry.index_array()
    k = np.arange(geometry.n_grid)
    atoms = np.exp(1j * TWO_PI * np.outer(idx, k) / geometry.n_grid)
    return Dictionary(atoms, geometry)


def make_full_array(n_grid: int) -> ArrayGeometry:
    return ArrayGeometry(n_grid, tuple(range(n_grid)), ArrayKind.FULL)


def make_sparse_array(n_grid: int, m: int, seed: int) -> ArrayGeometry:
    """Random thinned array: ``m`` distinct positions, always anchored at 0.

    Positions are drawn uniformly without replacement from ``{1..n_grid-1}``
    (plus the anchor) and sorted; deterministic per seed.
    """
    if not 1 <= m <= n_grid:
        raise ValueError(f"m must be in [1, n_grid], got m={m}, n_grid={n_grid}")
    rng = np.random.default_rng(seed)
    if m == 1:
        idx = np.array([0])
    else:
        rest = rng.choice(np.arange(1, n_grid), size=m - 1, replace=False)
        idx = np.sort(np.concatenate(([0], rest)))
    return ArrayGeometry(n_grid, tuple(int(i) for i in idx), ArrayKind.SPA)


def make_coprime_array(p: int, q: int, n_grid: int) -> ArrayGeometry:
    """Coprime array: union of two uniform subarrays with coprime spacings.

    Elements are ``{0, q, ..., (p-1)q} U {0, p, ..., (q-1)p}``, giving
    ``p + q - 1`` positions.
    """
    if math.gcd(p, q) != 1:
        raise ValueError(f"p and q must be coprime, got gcd({p},{q})={math.gcd(p, q)}")
    sub1 = q * np.arange(p)
    sub2 = p * np.arange(q)
    idx = np.unique(np.concatenate((sub1, sub2)))
    if idx[-1] >= n_grid:
        raise ValueError(
            f"coprime pattern exceeds grid: max index {idx[-1]} >= n_grid {n_grid}"
        )
    return ArrayGeometry(n_grid, tuple(int(i) for i in idx), ArrayKind.CPA)


def synth_ray_signal(
    rays: Sequence[Ray],
    geometry: ArrayGeometry,
    noise_sigma: float,
    seed: int,
) -> Measurement:
    """Synthesize ``y[r] = sum_l amp_l exp(j(2*pi*f_l*idx_r + phase_l)) + eps[r]``.

    The noise is circularly-symmetric complex Gaussian with *total* per-sample
    variance ``noise_sigma**2`` (each real dimension carries half of it).
    """
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    idx = geometry.index_array()
    y = np.zeros(geometry.m, dtype=complex)
    for ray in rays:
        y += ray.amp * np.exp(1j * (TWO_PI * ray.freq * idx + ray.phase))
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(geometry.m) + 1j * rng.standard_normal(geometry.m)
        y += noise_sigma / math.sqrt(2.0) * noise
    return Measurement(
        y=y,
        geometry=geometry,
        truth=tuple(rays),
        noise_sigma_true=float(noise_sigma),
    )


def rays_to_spectrum(rays: Sequence[Ray], n_grid: int) -> np.ndarray:
    """Ground-truth coefficient vector with each ray snapped to its nearest bin."""
    c = np.zeros(n_grid, dtype=complex)
    for ray in rays:
        k = int(round(ray.freq * n_grid)) % n_grid
        c[k] += ray.coefficient
    return c


# Benchmark six-ray scene used throughout the numerical studies.  The raw
# frequencies are slightly off-grid at N=256; the snapped variant places each
# ray exactly on its nearest bin so support recovery has an exact ground truth.
SIX_RAY_FREQS = (0.1212, 0.1413, 0.3132, 0.331, 0.41, 0.465)
SIX_RAY_AMPS = (1.0, 0.9254, 0.7331, 0.5678, 0.6, 0.8)
SIX_RAY_PHASES = (5.1191, 5.6913, 0.7979, 5.7389, 3.9732, 0.6129)
SIX_RAY_BINS_256 = (31, 36, 80, 85, 105, 119)


def six_ray_benchmark(n_grid: int = 256, snapped: bool = True) -> tuple:
    """The six-ray benchmark scene.

    With ``snapped=True`` frequencies are moved to their nearest grid bins
    (``SIX_RAY_BINS_256`` for N=256); with ``snapped=False`` the raw values are
    used, which leaves a small grid mismatch that acts as extra
    "sampling noise" on thinned arrays.
    """
    rays = []
    for f, a, p in zip(SIX_RAY_FREQS, SIX_RAY_AMPS, SIX_RAY_PHASES):
        if snapped:
            f = round(f * n_grid) / n_grid
        rays.append(Ray(freq=f, amp=a, phase=p))
    return tuple(rays)
