"""Core 2D geometry, the occupancy grid map, and map text I/O.

Conventions used throughout the package:

* World frame is right-handed, x right, y up, angles counter-clockwise.
* Grid origin is at the bottom-left corner, col indexes +x, row indexes +y.
* Cell coordinates refer to cell centers for all distance computations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Cell states stored in a GridMap's uint8 array.
FREE = 0
OCCUPIED = 1
UNKNOWN = 2

_STATE_TO_CHAR = {FREE: ".", OCCUPIED: "#", UNKNOWN: "?"}
_CHAR_TO_STATE = {c: s for s, c in _STATE_TO_CHAR.items()}

MAP_MAGIC = "P_GRID"


class OutOfBoundsError(Exception):
    """A world point or cell index lies outside the map extent."""


class MapParseError(Exception):
    """Malformed map text. Carries 1-based line and column of the offense."""

    def __init__(self, message: str, line: int, column: int | None = None):
        loc = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.column = column


def normalize_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


@dataclass(frozen=True)
class Pose2D:
    """Planar pose in the world frame. theta is normalized to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))


@dataclass(frozen=True)
class Twist2D:
    """Body-frame velocity: vx forward, vy left, omega counter-clockwise."""

    vx: float = 0.0
    vy: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.vx) and math.isfinite(self.vy) and math.isfinite(self.omega)):
            raise ValueError(f"twist components must be finite, got {self}")

    @property
    def speed(self) -> float:
        """Planar speed, sqrt(vx^2 + vy^2)."""
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class WorldConfig:
    """Physical robot constants. Defaults follow the platform datasheet."""

    robot_length: float = 0.60   # m
    robot_width: float = 0.42    # m
    max_velocity: float = 0.20   # m/s planar speed cap
    wheel_radius: float = 0.05   # m
    lx: float = 0.20             # m, half wheelbase (front-to-rear)
    ly: float = 0.15             # m, half track (left-to-right)
    payload: float = 0.5         # kg, informational

    def __post_init__(self):
        if self.max_velocity <= 0 or self.wheel_radius <= 0 or self.lx <= 0 or self.ly <= 0:
            raise ValueError("max_velocity, wheel_radius, lx, ly must all be positive")

    @property
    def circumscribed_radius(self) -> float:
        """Radius of the smallest circle containing the footprint."""
        return math.hypot(self.robot_length / 2.0, self.robot_width / 2.0)


def local_to_global(pose: Pose2D, p_local: tuple[float, float]) -> tuple[float, float]:
    """Transform a point from the pose's body frame into the world frame."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    px, py = p_local
    return (pose.x + c * px - s * py, pose.y + s * px + c * py)


def global_to_local(pose: Pose2D, p_world: tuple[float, float]) -> tuple[float, float]:
    """Inverse of local_to_global."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    dx, dy = p_world[0] - pose.x, p_world[1] - pose.y
    return (c * dx + s * dy, -s * dx + c * dy)


def compose(outer: Pose2D, inner: Pose2D) -> Pose2D:
    """Pose of inner expressed in outer's parent frame.

    Satisfies local_to_global(compose(a, b), p) == local_to_global(a, local_to_global(b, p)).
    """
    x, y = local_to_global(outer, (inner.x, inner.y))
    return Pose2D(x, y, outer.theta + inner.theta)


@dataclass
class GridMap:
    """2D occupancy array. cells is uint8 with shape (height, width), indexed [row, col]."""

    width: int
    height: int
    resolution: float
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("map dimensions must be positive")
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.cells.shape != (self.height, self.width):
            raise ValueError(
                f"cells shape {self.cells.shape} does not match {self.height}x{self.width}"
            )
        if self.cells.dtype != np.uint8:
            self.cells = self.cells.astype(np.uint8)

    @classmethod
    def filled(cls, width: int, height: int, resolution: float, state: int = FREE) -> "GridMap":
        return cls(width, height, resolution, np.full((height, width), state, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridMap):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.resolution == other.resolution
            and bool(np.array_equal(self.cells, other.cells))
        )

    def copy(self) -> "GridMap":
        return GridMap(self.width, self.height, self.resolution, self.cells.copy())

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height

    def get(self, col: int, row: int) -> int:
        if not self.in_bounds(col, row):
            raise OutOfBoundsError(f"cell ({col}, {row}) outside {self.width}x{self.height} map")
        return int(self.cells[row, col])

    def set(self, col: int, row: int, state: int) -> None:
        if state not in _STATE_TO_CHAR:
            raise ValueError(f"invalid cell state {state}")
        if not self.in_bounds(col, row):
            raise OutOfBoundsError(f"cell ({col}, {row}) outside {self.width}x{self.height} map")
        self.cells[row, col] = state

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        return ((col + 0.5) * self.resolution, (row + 0.5) * self.resolution)

    @property
    def extent(self) -> tuple[float, float]:
        """World-frame size (x_max, y_max) in meters."""
        return (self.width * self.resolution, self.height * self.resolution)


def world_to_cell(grid: GridMap, p: tuple[float, float]) -> tuple[int, int]:
    """Map a world point to its (col, row) cell by floor division.

    Raises OutOfBoundsError when p lies outside the map extent.
    """
    col = math.floor(p[0] / grid.resolution)
    row = math.floor(p[1] / grid.resolution)
    if not grid.in_bounds(col, row):
        raise OutOfBoundsError(
            f"point ({p[0]:.3f}, {p[1]:.3f}) outside map extent {grid.extent}"
        )
    return (col, row)


def load_map(text: str) -> GridMap:
    """Parse the grid text format.

    Header `P_GRID <width> <height> <resolution_m>` followed by `height`
    rows of `width` characters; the top text row is the highest row index.
    Characters: '.' Free, '#' Occupied, '?' Unknown.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MapParseError("empty map text", line=1)

    parts = lines[0].split(" ")
    if len(parts) != 4 or parts[0] != MAP_MAGIC:
        raise MapParseError(f"expected header '{MAP_MAGIC} <w> <h> <res>'", line=1)
    try:
        width, height = int(parts[1]), int(parts[2])
        resolution = float(parts[3])
    except ValueError:
        raise MapParseError("header fields must be int, int, float", line=1) from None
    if width <= 0 or height <= 0 or resolution <= 0 or not math.isfinite(resolution):
        raise MapParseError("header dimensions and resolution must be positive", line=1)

    if len(lines) != height + 1:
        raise MapParseError(f"expected {height} rows, found {len(lines) - 1}", line=len(lines))

    cells = np.empty((height, width), dtype=np.uint8)
    for i, raw in enumerate(lines[1:], start=2):
        if len(raw) != width:
            raise MapParseError(f"row has {len(raw)} characters, expected {width}", line=i)
        row = height - (i - 1)  # top text row = highest row index
        for j, ch in enumerate(raw):
            state = _CHAR_TO_STATE.get(ch)
            if state is None:
                raise MapParseError(f"invalid cell character {ch!r}", line=i, column=j + 1)
            cells[row, j] = state
    return GridMap(width, height, resolution, cells)


def save_map(grid: GridMap) -> str:
    """Serialize a GridMap to the text format; load_map(save_map(m)) == m."""
    out = [f"{MAP_MAGIC} {grid.width} {grid.height} {grid.resolution!r}"]
    lut = np.array([ord(_STATE_TO_CHAR[s]) for s in (FREE, OCCUPIED, UNKNOWN)], dtype=np.uint8)
    for row in range(grid.height - 1, -1, -1):
        out.append(lut[grid.cells[row]].tobytes().decode("ascii"))
    return "\n".join(out) + "\n"
