"""Simulated lidar and time-of-flight range sensors, and the occupancy mapper.

Rays are traced with exact cell-crossing traversal (no sampling): a beam's
range is the distance to the boundary of the first Occupied cell it enters,
clamped to the sensor's maximum. Unknown cells are transparent to the
sensors; only Occupied cells stop a ray. When a ray crosses exactly through
a cell corner, the x-adjacent cell is stepped first (fixed convention, so
identical inputs always give identical ranges).

The mapper writes the robot's own map from scans: cells a beam fully
traverses become Free, the entered hit cell becomes Occupied. An Occupied
mark is sticky; it takes `clear_after` consecutive contradicting Free
observations (at most one per update call) before the cell is released
back to Free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import FREE, OCCUPIED, UNKNOWN, GridMap, Pose2D, world_to_cell

TWO_PI = 2.0 * math.pi

DEFAULT_N_BEAMS = 360
DEFAULT_LIDAR_RANGE = 6.0  # m
DEFAULT_TOF_RANGE = 4.0    # m


class PoseInObstacleError(Exception):
    """The sensor pose sits inside an Occupied cell."""


@dataclass(frozen=True)
class LidarScan:
    """360-degree scan. Angles are robot-frame, strictly increasing from 0."""

    angles: np.ndarray
    ranges: np.ndarray
    max_range: float

    def __post_init__(self):
        n = len(self.angles)
        if n < 4:
            raise ValueError("scan needs at least 4 beams")
        step = TWO_PI / n
        expect = np.arange(n) * step
        if not np.allclose(self.angles, expect, atol=1e-9):
            raise ValueError("beam angles must cover [0, 2*pi) in equal steps from 0")
        if not ((self.ranges > 0) & (self.ranges <= self.max_range + 1e-12)).all():
            raise ValueError("ranges must lie in (0, max_range]")

    @property
    def beams(self) -> list[tuple[float, float]]:
        return list(zip(self.angles.tolist(), self.ranges.tolist()))


@dataclass(frozen=True)
class RangeReadings:
    """Single-ray ToF readings at robot-frame angles +pi/2, -pi/2, pi."""

    left: float
    right: float
    back: float


def _ray_state(ox: float, oy: float, angles: np.ndarray, res: float):
    dx, dy = np.cos(angles), np.sin(angles)
    col0 = math.floor(ox / res)
    row0 = math.floor(oy / res)
    n = len(angles)
    col = np.full(n, col0, dtype=np.int64)
    row = np.full(n, row0, dtype=np.int64)
    sx = np.where(dx > 0, 1, -1).astype(np.int64)
    sy = np.where(dy > 0, 1, -1).astype(np.int64)
    with np.errstate(divide="ignore"):
        t_dx = np.where(dx != 0.0, res / np.abs(dx), np.inf)
        t_dy = np.where(dy != 0.0, res / np.abs(dy), np.inf)
        t_mx = np.where(dx != 0.0, ((col0 + (sx > 0)) * res - ox) / dx, np.inf)
        t_my = np.where(dy != 0.0, ((row0 + (sy > 0)) * res - oy) / dy, np.inf)
    return col, row, sx, sy, t_dx, t_dy, t_mx, t_my


def cast_rays(
    grid: GridMap, ox: float, oy: float, world_angles: np.ndarray, max_range: float
) -> np.ndarray:
    """First-hit range for each world-frame ray angle from (ox, oy).

    Out-of-map space is treated as free to the horizon; rays that leave the
    map or see nothing within max_range report exactly max_range.
    """
    res = grid.resolution
    cells = grid.cells
    col, row, sx, sy, t_dx, t_dy, t_mx, t_my = _ray_state(ox, oy, world_angles, res)
    n = len(world_angles)
    ranges = np.full(n, float(max_range))
    alive = np.ones(n, dtype=bool)
    min_range = res * 1e-9

    for _ in range(2 * (grid.width + grid.height) + 4):
        if not alive.any():
            break
        go_x = (t_mx <= t_my) & alive
        go_y = alive & ~go_x
        t_entry = np.where(go_x, t_mx, t_my)
        col = col + sx * go_x
        row = row + sy * go_y
        t_mx = t_mx + t_dx * go_x
        t_my = t_my + t_dy * go_y

        alive &= ~(alive & (t_entry > max_range))
        inb = (col >= 0) & (col < grid.width) & (row >= 0) & (row < grid.height)
        alive &= inb
        live = np.flatnonzero(alive)
        if live.size:
            hit = live[cells[row[live], col[live]] == OCCUPIED]
            if hit.size:
                ranges[hit] = np.maximum(t_entry[hit], min_range)
                alive[hit] = False
    return ranges


def _check_sensor_pose(world: GridMap, pose: Pose2D) -> None:
    col, row = world_to_cell(world, (pose.x, pose.y))  # raises outside the map
    if world.get(col, row) == OCCUPIED:
        raise PoseInObstacleError(f"sensor pose ({pose.x:.3f}, {pose.y:.3f}) is inside a wall")


def simulate_lidar(
    world: GridMap,
    pose: Pose2D,
    n_beams: int = DEFAULT_N_BEAMS,
    max_range: float = DEFAULT_LIDAR_RANGE,
    jitter: float = 0.0,
    rng: np.random.Generator | None = None,
) -> LidarScan:
    """Full-circle scan from the pose over the ground-truth map.

    Optional uniform range jitter of +-jitter meters (seeded rng required)
    models sensor noise; it is off by default and never pushes a reading
    outside (0, max_range].
    """
    if n_beams < 4:
        raise ValueError("n_beams must be >= 4")
    _check_sensor_pose(world, pose)
    angles = np.arange(n_beams) * (TWO_PI / n_beams)
    ranges = cast_rays(world, pose.x, pose.y, pose.theta + angles, max_range)
    if jitter > 0.0:
        if rng is None:
            raise ValueError("jitter requires a seeded rng for determinism")
        ranges = np.clip(ranges + rng.uniform(-jitter, jitter, n_beams),
                         world.resolution * 1e-9, max_range)
    return LidarScan(angles, ranges, max_range)


def simulate_range_sensors(
    world: GridMap, pose: Pose2D, max_range_tof: float = DEFAULT_TOF_RANGE
) -> RangeReadings:
    """Left, right, and back single-ray ToF readings (lidar blind spots)."""
    _check_sensor_pose(world, pose)
    offsets = np.array([math.pi / 2.0, -math.pi / 2.0, math.pi])
    r = cast_rays(world, pose.x, pose.y, pose.theta + offsets, max_range_tof)
    return RangeReadings(left=float(r[0]), right=float(r[1]), back=float(r[2]))


class OccupancyMapper:
    """Writes the robot's own occupancy map from lidar scans.

    Owns the hysteresis state: an Occupied cell is only demoted to Free
    after `clear_after` consecutive update calls observed it free. The
    single-writer contract applies; callers own synchronization.
    """

    def __init__(self, grid: GridMap, clear_after: int = 3):
        if clear_after < 1:
            raise ValueError("clear_after must be >= 1")
        self.grid = grid
        self.clear_after = clear_after
        self._streak = np.zeros((grid.height, grid.width), dtype=np.uint16)

    def update_occupancy(self, pose: Pose2D, scan: LidarScan) -> GridMap:
        """Integrate one scan taken at the given pose estimate.

        Cells fully traversed by a beam are observed Free; each beam with a
        range short of max_range marks the entered cell Occupied. Occupied
        wins over Free within a single scan. Out-of-map cells are skipped.
        Never writes Unknown, so knowledge is monotone.
        """
        grid = self.grid
        res = grid.resolution
        h, w = grid.height, grid.width
        free_seen = np.zeros((h, w), dtype=bool)
        occ_seen = np.zeros((h, w), dtype=bool)

        world_angles = pose.theta + scan.angles
        ranges = scan.ranges
        col, row, sx, sy, t_dx, t_dy, t_mx, t_my = _ray_state(pose.x, pose.y, world_angles, res)
        is_hit = ranges < scan.max_range
        alive = np.ones(len(world_angles), dtype=bool)

        for _ in range(2 * (w + h) + 4):
            if not alive.any():
                break
            inb = (col >= 0) & (col < w) & (row >= 0) & (row < h)
            alive &= inb
            t_exit = np.minimum(t_mx, t_my)
            ending = alive & (t_exit > ranges)  # current cell holds the beam endpoint
            hit_now = ending & is_hit
            if hit_now.any():
                occ_seen[row[hit_now], col[hit_now]] = True
            alive &= ~ending
            if alive.any():
                free_seen[row[alive], col[alive]] = True
            go_x = (t_mx <= t_my) & alive
            go_y = alive & ~go_x
            col = col + sx * go_x
            row = row + sy * go_y
            t_mx = t_mx + t_dx * go_x
            t_my = t_my + t_dy * go_y

        free_obs = free_seen & ~occ_seen  # occupied beats free on conflict
        cells = grid.cells
        was_occ = cells == OCCUPIED

        contradicted = free_obs & was_occ
        self._streak[contradicted] += 1
        release = contradicted & (self._streak >= self.clear_after)
        cells[release] = FREE
        self._streak[release] = 0

        cells[free_obs & ~was_occ] = FREE
        cells[occ_seen] = OCCUPIED
        self._streak[occ_seen] = 0
        # an occupied observation interrupts a clearing streak even if the
        # cell was not occupied yet; seen-free keeps streaks of others intact
        self._streak[~contradicted & ~occ_seen & free_obs] = 0
        return grid
