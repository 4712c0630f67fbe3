"""Procedural heightfield terrains and the per-agent difficulty curriculum.

Five families: smooth, rough, discretized, stairs, fractal. Fractal terrains
use multi-octave value noise with ten peak-to-peak amplitude levels spaced
linearly across [0.04, 0.12] m. Generation is deterministic in
(kind, level, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

KINDS = ("smooth", "rough", "discretized", "stairs", "fractal")
MAX_LEVEL = 9

FRACTAL_AMP_MIN = 0.04
FRACTAL_AMP_MAX = 0.12
FRACTAL_OCTAVES = 4
FRACTAL_LACUNARITY = 2.0
FRACTAL_PERSISTENCE = 0.5

STAIR_RISE_MIN = 0.02
STAIR_RISE_MAX = 0.15
STAIR_RUN = 0.30

PROMOTE_FRACTION = 0.8
DEMOTE_FRACTION = 0.4


def fractal_amplitude(level: int) -> float:
    """Peak-to-peak amplitude for a fractal level, linear over the range."""
    return FRACTAL_AMP_MIN + level * (FRACTAL_AMP_MAX - FRACTAL_AMP_MIN) / MAX_LEVEL


@dataclass
class Heightfield:
    resolution: float  # grid spacing, m
    extent: float  # half-width of the square field, m
    heights: np.ndarray  # (ny, nx), row-major over y then x
    kind: str
    level: int
    seed: int

    def height_at(self, x, y):
        """Bilinear height query; coordinates clamp to the field extents."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ny, nx = self.heights.shape
        gx = np.clip((x + self.extent) / self.resolution, 0.0, nx - 1.000001)
        gy = np.clip((y + self.extent) / self.resolution, 0.0, ny - 1.000001)
        x0 = np.floor(gx).astype(int)
        y0 = np.floor(gy).astype(int)
        fx = gx - x0
        fy = gy - y0
        h00 = self.heights[y0, x0]
        h01 = self.heights[y0, x0 + 1]
        h10 = self.heights[y0 + 1, x0]
        h11 = self.heights[y0 + 1, x0 + 1]
        return (
            h00 * (1 - fx) * (1 - fy)
            + h01 * fx * (1 - fy)
            + h10 * (1 - fx) * fy
            + h11 * fx * fy
        )

    def save(self, path) -> None:
        """Portable grid file: text header then row-major heights."""
        ny, nx = self.heights.shape
        with open(path, "w", encoding="utf-8") as f:
            f.write(
                f"# ftquad heightfield v1\n"
                f"kind {self.kind}\nlevel {self.level}\nseed {self.seed}\n"
                f"resolution {self.resolution!r}\nextent {self.extent!r}\n"
                f"shape {ny} {nx}\n"
            )
            np.savetxt(f, self.heights, fmt="%.9g")

    @staticmethod
    def load(path) -> "Heightfield":
        meta = {}
        rows = []
        with open(path, encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split()
                if parts[0] in ("kind", "level", "seed", "resolution", "extent", "shape"):
                    meta[parts[0]] = parts[1:]
                else:
                    rows.append([float(v) for v in parts])
        ny, nx = (int(v) for v in meta["shape"])
        heights = np.array(rows).reshape(ny, nx)
        return Heightfield(
            resolution=float(meta["resolution"][0]),
            extent=float(meta["extent"][0]),
            heights=heights,
            kind=meta["kind"][0],
            level=int(meta["level"][0]),
            seed=int(meta["seed"][0]),
        )


class FlatTerrain:
    """Zero-height ground; the trivial terrain used by diagnostics."""

    def height_at(self, x, y):
        return np.zeros_like(np.asarray(x, dtype=float))


def _value_noise(rng: np.random.Generator, shape, feature_cells: int) -> np.ndarray:
    """Bilinear-interpolated lattice noise in [-1, 1]."""
    ny, nx = shape
    lat = rng.uniform(-1.0, 1.0, size=(feature_cells + 2, feature_cells + 2))
    gy = np.linspace(0, feature_cells, ny)
    gx = np.linspace(0, feature_cells, nx)
    y0 = np.floor(gy).astype(int)
    x0 = np.floor(gx).astype(int)
    fy = (gy - y0)[:, None]
    fx = (gx - x0)[None, :]
    # smoothstep for C1 continuity
    fy = fy * fy * (3 - 2 * fy)
    fx = fx * fx * (3 - 2 * fx)
    h00 = lat[np.ix_(y0, x0)]
    h01 = lat[np.ix_(y0, x0 + 1)]
    h10 = lat[np.ix_(y0 + 1, x0)]
    h11 = lat[np.ix_(y0 + 1, x0 + 1)]
    return (
        h00 * (1 - fx) * (1 - fy)
        + h01 * fx * (1 - fy)
        + h10 * (1 - fx) * fy
        + h11 * fx * fy
    )


def generate(
    kind: str,
    level: int,
    seed: int,
    resolution: float = 0.05,
    extent: float = 4.0,
) -> Heightfield:
    """Generate one terrain tile covering [-extent, extent]^2."""
    if kind not in KINDS:
        raise ValueError(f"unknown terrain kind {kind!r}")
    if not (0 <= level <= MAX_LEVEL):
        raise ValueError(f"terrain level {level} outside [0, {MAX_LEVEL}]")
    rng = np.random.default_rng(
        np.random.SeedSequence([KINDS.index(kind), level, seed & 0xFFFFFFFF])
    )
    n = int(round(2 * extent / resolution)) + 1
    if kind == "smooth":
        heights = rng.uniform(-0.001, 0.001, size=(n, n))
    elif kind == "rough":
        amp = 0.005 + level * 0.005
        heights = rng.uniform(-amp, amp, size=(n, n))
    elif kind == "discretized":
        heights = np.zeros((n, n))
        amp = 0.02 + level * 0.01
        for _ in range(40):
            h = rng.uniform(-amp, amp)
            cy, cx = rng.integers(0, n, size=2)
            sy, sx = rng.integers(4, max(5, n // 8), size=2)
            heights[cy : cy + sy, cx : cx + sx] += h
    elif kind == "stairs":
        rise = STAIR_RISE_MIN + level * (STAIR_RISE_MAX - STAIR_RISE_MIN) / MAX_LEVEL
        xs = np.arange(n) * resolution - extent
        step_idx = np.floor(np.abs(xs) / STAIR_RUN)
        heights = np.tile(step_idx * rise, (n, 1))
    else:  # fractal
        amp = fractal_amplitude(level)
        noise = np.zeros((n, n))
        total = 0.0
        cells = 4
        scale = 1.0
        for _ in range(FRACTAL_OCTAVES):
            noise += scale * _value_noise(rng, (n, n), cells)
            total += scale
            scale *= FRACTAL_PERSISTENCE
            cells = int(cells * FRACTAL_LACUNARITY)
        noise /= total
        span = noise.max() - noise.min()
        heights = (noise - noise.min()) / span * amp
        heights -= heights.mean()
    return Heightfield(
        resolution=resolution,
        extent=extent,
        heights=heights,
        kind=kind,
        level=level,
        seed=seed,
    )


def local_heightmap(
    field,
    base_position: np.ndarray,
    base_yaw: np.ndarray,
    grid: int = 11,
    spacing: float = 0.1,
) -> np.ndarray:
    """Body-yaw-aligned height samples around the base, relative to base height.

    Returns (n, grid*grid); default 11x11 at 0.1 m spacing.
    """
    base_position = np.atleast_2d(base_position)
    base_yaw = np.atleast_1d(base_yaw)
    half = (grid - 1) / 2.0
    lin = (np.arange(grid) - half) * spacing
    gx, gy = np.meshgrid(lin, lin, indexing="xy")
    gx = gx.ravel()
    gy = gy.ravel()
    c = np.cos(base_yaw)[:, None]
    s = np.sin(base_yaw)[:, None]
    wx = base_position[:, 0:1] + c * gx - s * gy
    wy = base_position[:, 1:2] + s * gx + c * gy
    return field.height_at(wx, wy) - base_position[:, 2:3]


@dataclass
class TerrainCurriculum:
    """Per-agent difficulty level, promoted/demoted by traversal performance."""

    level: int = 0
    promotions: int = 0
    demotions: int = 0

    def update(
        self, tracked_distance: float, command_speed: float, episode_length: float
    ) -> "TerrainCurriculum":
        commanded = abs(command_speed) * episode_length
        if commanded <= 0.0:
            return self
        frac = tracked_distance / commanded
        level = self.level
        promotions, demotions = self.promotions, self.demotions
        if frac > PROMOTE_FRACTION:
            level = min(level + 1, MAX_LEVEL)
            promotions += 1
        elif frac < DEMOTE_FRACTION:
            level = max(level - 1, 0)
            demotions += 1
        return TerrainCurriculum(level, promotions, demotions)


def curriculum_update(
    curr: TerrainCurriculum,
    tracked_distance: float,
    command_speed: float,
    episode_length: float,
) -> TerrainCurriculum:
    return curr.update(tracked_distance, command_speed, episode_length)
