"""Synthetic measurement data: sampling a reference flow and corrupting it with Gaussian noise.

Noise generator: PCG64 (numpy's ``np.random.PCG64``) seeded with the run seed
produces uniform doubles in [0, 1); consecutive pairs (u1, u2) are mapped by
Box-Muller to ``sqrt(-2 ln(1 - u1)) * (cos 2 pi u2, sin 2 pi u2)``. Draws fill
the (N^2, 2) array in C order, so component x of cell 0 comes first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .fem.dofmap import Field
from .fem.interpolation import IHMode, interpolate_IH
from .mesh import CoarseGrid


def standard_normal(shape, seed: int) -> np.ndarray:
    """Deterministic N(0, 1) draws via PCG64 + Box-Muller (see module docstring)."""
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    size = int(np.prod(shape))
    pairs = (size + 1) // 2
    u = np.random.Generator(np.random.PCG64(seed)).random(2 * pairs)
    r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    theta = 2.0 * np.pi * u[1::2]
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(theta)
    z[1::2] = r * np.sin(theta)
    return z[:size].reshape(shape)


def sample_pointwise(reference: Field, obs_vertices) -> np.ndarray:
    """Velocity of ``reference`` at each observation vertex, shape (len(obs_vertices), 2)."""
    obs = np.asarray(obs_vertices, dtype=np.int64)
    nv = reference.dofmap.n_vertices
    if obs.size and (obs.min() < 0 or obs.max() >= nv):
        raise IndexError(f"observation vertex out of range [0, {nv})")
    return reference.components[obs].copy()


def add_gaussian_noise(clean, snr: float, u_max: float = 1.0, seed: int = 0) -> np.ndarray:
    """Add i.i.d. N(0, (snr * u_max)^2) noise to every component."""
    if snr < 0:
        raise ValueError(f"snr must be nonnegative, got {snr}")
    if not u_max > 0:
        raise ValueError(f"u_max must be positive, got {u_max}")
    clean = np.asarray(clean, dtype=float)
    if snr == 0:
        return clean.copy()
    return clean + (snr * u_max) * standard_normal(clean.shape, seed)


@dataclass(eq=False)
class ObservationSet:
    grid: CoarseGrid
    obs_vertices: np.ndarray
    clean_values: np.ndarray
    noisy_values: np.ndarray
    snr: float
    seed: int
    u_max: float = 1.0
    ih_mode: IHMode = IHMode.POINT_VALUE

    @property
    def noise(self) -> np.ndarray:
        return self.noisy_values - self.clean_values

    def to_dict(self) -> dict:
        return {
            "N": self.grid.N,
            "snr": self.snr,
            "seed": self.seed,
            "u_max": self.u_max,
            "ih_mode": IHMode(self.ih_mode).value,
            "vertex_ids": [int(v) for v in self.obs_vertices],
            "clean": self.clean_values.tolist(),
            "noisy": self.noisy_values.tolist(),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, doc: dict) -> "ObservationSet":
        return cls(
            grid=CoarseGrid(int(doc["N"])),
            obs_vertices=np.asarray(doc["vertex_ids"], dtype=np.int64),
            clean_values=np.asarray(doc["clean"], dtype=float).reshape(-1, 2),
            noisy_values=np.asarray(doc["noisy"], dtype=float).reshape(-1, 2),
            snr=float(doc["snr"]),
            seed=int(doc["seed"]),
            u_max=float(doc["u_max"]),
            ih_mode=IHMode(doc.get("ih_mode", IHMode.POINT_VALUE.value)),
        )

    @classmethod
    def from_json(cls, text_or_path) -> "ObservationSet":
        text = str(text_or_path)
        if not text.lstrip().startswith("{"):
            with open(text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))


def make_observations(reference: Field, grid: CoarseGrid, obs_vertices, snr: float = 0.0, seed: int = 0,
                      u_max: float = 1.0, ih_mode=IHMode.POINT_VALUE) -> ObservationSet:
    """Sample I_H of the reference in ``ih_mode`` and add noise to the cell values."""
    ih_mode = IHMode(ih_mode)
    obs_vertices = np.asarray(obs_vertices, dtype=np.int64)
    if ih_mode is IHMode.POINT_VALUE:
        clean = sample_pointwise(reference, obs_vertices)
    else:
        clean = interpolate_IH(reference, grid, ih_mode)
    noisy = add_gaussian_noise(clean, snr, u_max, seed)
    return ObservationSet(grid, obs_vertices, clean, noisy, float(snr), int(seed), float(u_max), ih_mode)


def noise_interpolant_norm(obs: ObservationSet) -> float:
    """L2 norm of the piecewise-constant noise interpolant, sqrt(sum |cell| |eps_cell|^2)."""
    eps = obs.noise
    return float(np.sqrt(obs.grid.cell_area * np.sum(eps * eps)))
