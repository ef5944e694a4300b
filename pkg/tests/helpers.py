"""Independent oracle implementations shared by the test suite.

Everything here is deliberately written from first principles (matrix
products, brute-force scans, fine-step marches) so it exercises none of
the package's own code paths.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from warebot.geometry import FREE, GridMap

SQRT2 = math.sqrt(2.0)


def rot_apply(theta: float, x: float, y: float) -> tuple[float, float]:
    """Apply a 2x2 rotation matrix to a column vector, the long way."""
    m = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    v = m @ np.array([x, y])
    return (float(v[0]), float(v[1]))


def mecanum_fk_matrix(ws4: tuple[float, float, float, float], r: float, s: float) -> tuple[float, float, float]:
    """Forward kinematics as an explicit 3x4 matrix product."""
    m = (r / 4.0) * np.array(
        [
            [1.0, 1.0, 1.0, 1.0],
            [-1.0, 1.0, 1.0, -1.0],
            [-1.0 / s, 1.0 / s, -1.0 / s, 1.0 / s],
        ]
    )
    v = m @ np.array(ws4)
    return (float(v[0]), float(v[1]), float(v[2]))


def octile_cells(dc: int, dr: int) -> float:
    """8-connected shortest path length between two cells in units of cells."""
    a, b = abs(dc), abs(dr)
    lo, hi = min(a, b), max(a, b)
    return (hi - lo) + lo * SQRT2


def brute_force_distance_field(grid: GridMap) -> np.ndarray:
    """Per-cell min over all wall cells of the octile step distance, in meters.

    O(n^2) scan; walls are Occupied or Unknown cells.
    """
    walls = np.argwhere(grid.cells != FREE)  # (row, col) pairs
    d = np.full((grid.height, grid.width), np.inf)
    for row in range(grid.height):
        for col in range(grid.width):
            best = np.inf
            for wr, wc in walls:
                best = min(best, octile_cells(col - int(wc), row - int(wr)))
            d[row, col] = best * grid.resolution
    return d


def dijkstra_grid_cost(
    grid: GridMap,
    d_field: np.ndarray,
    start: tuple[int, int],
    goal: tuple[int, int],
    k_safety: float,
    clearance: float,
) -> float | None:
    """Reference shortest-path cost on the planner's graph, no heuristic.

    Edge cost entering cell b is move(a, b) + k_safety / d(b); cells with
    d <= clearance are untraversable; diagonal moves are blocked when either
    shared orthogonal neighbor is untraversable. Returns None if unreachable.
    """
    res = grid.resolution
    w, h = grid.width, grid.height

    def trav(c: int, r: int) -> bool:
        return (
            0 <= c < w
            and 0 <= r < h
            and grid.cells[r, c] == FREE
            and d_field[r, c] > clearance
        )

    if not (trav(*start) and trav(*goal)):
        return None
    dist: dict[tuple[int, int], float] = {start: 0.0}
    pq: list[tuple[float, tuple[int, int]]] = [(0.0, start)]
    done: set[tuple[int, int]] = set()
    while pq:
        g, cell = heapq.heappop(pq)
        if cell in done:
            continue
        done.add(cell)
        if cell == goal:
            return g
        c, r = cell
        for dc in (-1, 0, 1):
            for dr in (-1, 0, 1):
                if dc == 0 and dr == 0:
                    continue
                nc, nr = c + dc, r + dr
                if not trav(nc, nr):
                    continue
                if dc != 0 and dr != 0 and not (trav(c + dc, r) and trav(c, r + dr)):
                    continue
                move = res * (SQRT2 if dc != 0 and dr != 0 else 1.0)
                ng = g + move + (k_safety / d_field[nr, nc] if k_safety else 0.0)
                if ng < dist.get((nc, nr), math.inf):
                    dist[(nc, nr)] = ng
                    heapq.heappush(pq, (ng, (nc, nr)))
    return None


def fine_ray_march(
    grid: GridMap, ox: float, oy: float, angle: float, max_range: float, step_frac: float = 0.05
) -> float:
    """Sampled ray march at step_frac of a cell per step; returns first-hit range.

    Independent of the exact cell-crossing traversal in the package. The
    returned range is accurate to one step.
    """
    step = grid.resolution * step_frac
    dx, dy = math.cos(angle), math.sin(angle)
    t = step
    while t <= max_range:
        px, py = ox + t * dx, oy + t * dy
        col = math.floor(px / grid.resolution)
        row = math.floor(py / grid.resolution)
        if grid.in_bounds(col, row) and grid.cells[row, col] == 1:  # OCCUPIED
            return t
        t += step
    return max_range


def homogeneous_arm_chain(
    theta_base: float,
    d_elev: float,
    d_tel: float,
    wrist_pitch: float,
    wrist_roll: float,
    mount_x: float,
    mount_y: float,
    mount_z: float,
    mount_theta: float,
    r0: float,
    z0: float,
) -> tuple[float, float, float, float, float]:
    """End-effector pose via explicit 4x4 homogeneous transforms."""

    def rot_z(a: float) -> np.ndarray:
        m = np.eye(4)
        m[0, 0] = m[1, 1] = math.cos(a)
        m[0, 1] = -math.sin(a)
        m[1, 0] = math.sin(a)
        return m

    def trans(x: float, y: float, z: float) -> np.ndarray:
        m = np.eye(4)
        m[:3, 3] = (x, y, z)
        return m

    chain = (
        trans(mount_x, mount_y, mount_z)
        @ rot_z(mount_theta)
        @ rot_z(theta_base)
        @ trans(0.0, 0.0, z0 + d_elev)
        @ trans(r0 + d_tel, 0.0, 0.0)
    )
    pos = chain @ np.array([0.0, 0.0, 0.0, 1.0])
    yaw = mount_theta + theta_base + wrist_roll
    yaw = math.pi - (math.pi - yaw) % (2.0 * math.pi)
    return (float(pos[0]), float(pos[1]), float(pos[2]), yaw, wrist_pitch)


def eig2x2_principal_angle(pts: np.ndarray) -> float:
    """Principal axis angle of a 2D point cloud via the characteristic polynomial.

    Closed form for the dominant eigenvector of the 2x2 sample covariance;
    result mapped to (-pi/2, pi/2].
    """
    mu = pts.mean(axis=0)
    q = pts - mu
    n = len(pts)
    sxx = float((q[:, 0] * q[:, 0]).sum()) / (n - 1)
    syy = float((q[:, 1] * q[:, 1]).sum()) / (n - 1)
    sxy = float((q[:, 0] * q[:, 1]).sum()) / (n - 1)
    # Dominant root of lambda^2 - (sxx+syy) lambda + (sxx syy - sxy^2) = 0.
    lam = 0.5 * (sxx + syy) + 0.5 * math.sqrt((sxx - syy) ** 2 + 4.0 * sxy * sxy)
    # Eigenvector: (sxy, lam - sxx), or (lam - syy, sxy) when the first is null.
    vx, vy = sxy, lam - sxx
    if abs(vx) < 1e-300 and abs(vy) < 1e-300:
        vx, vy = lam - syy, sxy
    ang = math.atan2(vy, vx)
    if ang <= -math.pi / 2.0:
        ang += math.pi
    elif ang > math.pi / 2.0:
        ang -= math.pi
    return ang
