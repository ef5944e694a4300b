"""Distance field and safety-weighted A* grid planning.

The planner searches the 8-connected cell graph with move costs
{1, sqrt(2)} * resolution. Entering a cell b adds a safety surcharge
k_safety / d(b), where d is the distance to the nearest wall; the
surcharge accumulates into the G cost so the whole path is pushed away
from walls, not just the node under evaluation. Node priority is
J = G + H with H the Euclidean cell-center distance to the goal, which
stays admissible because the surcharge is nonnegative.

Two interchangeable open-list implementations are provided: a binary
min-heap and a linear scan. Under the shared tie-breaking rule (lowest J,
then lowest H, then row-major cell index) both expand identical node
sequences and return identical paths.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import FREE, GridMap, WorldConfig

SQRT2 = math.sqrt(2.0)

DEFAULT_K = 0.05  # cost * meters
DEFAULT_CLEARANCE = WorldConfig().circumscribed_radius

# Neighbor order is part of the determinism contract: orthogonal first,
# then diagonals, each in (+col, -col, +row, -row) order.
_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


class NoPathError(Exception):
    """Goal is unreachable from start on the traversable subgraph."""


class InvalidEndpointError(Exception):
    """Start or goal is not a traversable cell."""


class WallContactError(Exception):
    """Safety cost is undefined on a wall cell (distance zero)."""


@dataclass
class DistanceField:
    """Per-cell distance to the nearest wall, meters; same layout as GridMap.cells."""

    width: int
    height: int
    resolution: float
    d: np.ndarray = field(repr=False)

    def at(self, col: int, row: int) -> float:
        return float(self.d[row, col])


def distance_field(grid: GridMap) -> DistanceField:
    """Distance to the nearest Occupied or Unknown cell for every cell.

    Distances are shortest 8-connected step sequences with costs
    {1, sqrt(2)} * resolution (a multi-source brushfire expansion).
    Computed with the exact two-pass chamfer recurrence, which yields the
    same values as the brushfire BFS. Maps with no walls give +inf
    everywhere; wall cells themselves are 0.
    """
    h, w = grid.height, grid.width
    d = np.where(grid.cells != FREE, 0.0, np.inf)
    cols = np.arange(w, dtype=float)

    def relax_row(row: np.ndarray, prev: np.ndarray | None) -> np.ndarray:
        if prev is not None:
            row = np.minimum(row, prev + 1.0)
            row[1:] = np.minimum(row[1:], prev[:-1] + SQRT2)
            row[:-1] = np.minimum(row[:-1], prev[1:] + SQRT2)
        # In-scan axis sweep: min over k <= c of row[k] + (c - k).
        row = np.minimum(row, cols + np.minimum.accumulate(row - cols))
        rev = row[::-1]
        rev = np.minimum(rev, cols + np.minimum.accumulate(rev - cols))
        return rev[::-1]

    for r in range(h):  # forward pass, bottom row upward
        d[r] = relax_row(d[r].copy(), d[r - 1] if r > 0 else None)
    for r in range(h - 2, -1, -1):  # backward pass
        d[r] = relax_row(d[r].copy(), d[r + 1])
    return DistanceField(w, h, grid.resolution, d * grid.resolution)


def safety_cost(d: float, k: float) -> float:
    """Wall-proximity surcharge k / d; raises WallContactError at d == 0."""
    if d < 0:
        raise ValueError(f"distance must be nonnegative, got {d}")
    if d == 0:
        raise WallContactError("safety cost undefined on a wall cell")
    if k == 0.0:
        return 0.0
    return k / d


@dataclass
class PlanNode:
    """Per-path-node cost breakdown. s is the node's own surcharge k/d."""

    cell: tuple[int, int]
    g: float
    h: float
    s: float
    parent: tuple[int, int] | None


@dataclass
class PlanResult:
    cells: list[tuple[int, int]]
    nodes: list[PlanNode]
    total_cost: float
    expanded: int
    waypoints: list[tuple[float, float]]


class _HeapOpenList:
    __slots__ = ("_heap",)

    def __init__(self):
        self._heap: list[tuple[float, float, int, float]] = []

    def push(self, f: float, h: float, idx: int, g: float) -> None:
        heapq.heappush(self._heap, (f, h, idx, g))

    def pop(self) -> tuple[float, float, int, float]:
        return heapq.heappop(self._heap)

    def __len__(self) -> int:
        return len(self._heap)


class _LinearOpenList:
    """Unsorted open list popped by a linear scan.

    The scan runs over the whole slab every pop, which is the O(n) behavior
    the heap variant is measured against; numpy keeps the constant factor
    small enough to benchmark without changing asymptotics.
    """

    __slots__ = ("_f", "_h", "_g", "_idx", "_n")

    def __init__(self):
        cap = 1024
        self._f = np.empty(cap)
        self._h = np.empty(cap)
        self._g = np.empty(cap)
        self._idx = np.empty(cap, dtype=np.int64)
        self._n = 0

    def push(self, f: float, h: float, idx: int, g: float) -> None:
        n = self._n
        if n == len(self._f):
            for name in ("_f", "_h", "_g", "_idx"):
                arr = getattr(self, name)
                grown = np.empty(2 * len(arr), dtype=arr.dtype)
                grown[:n] = arr
                setattr(self, name, grown)
        self._f[n] = f
        self._h[n] = h
        self._g[n] = g
        self._idx[n] = idx
        self._n = n + 1

    def pop(self) -> tuple[float, float, int, float]:
        n = self._n
        f = self._f[:n]
        cand = np.flatnonzero(f == f.min())
        if len(cand) > 1:  # tie on J: lower H, then row-major index
            hs = self._h[cand]
            cand = cand[hs == hs.min()]
        i = int(cand[np.argmin(self._idx[cand])]) if len(cand) > 1 else int(cand[0])
        out = (float(self._f[i]), float(self._h[i]), int(self._idx[i]), float(self._g[i]))
        last = n - 1
        for arr in (self._f, self._h, self._g, self._idx):
            arr[i] = arr[last]
        self._n = last
        return out

    def __len__(self) -> int:
        return self._n


def _open_list(kind: str):
    if kind == "heap":
        return _HeapOpenList()
    if kind == "linear":
        return _LinearOpenList()
    raise ValueError(f"unknown open list kind {kind!r}")


def astar(
    grid: GridMap,
    dist: DistanceField,
    start: tuple[int, int],
    goal: tuple[int, int],
    *,
    k_safety: float = DEFAULT_K,
    clearance: float = DEFAULT_CLEARANCE,
    open_list: str = "heap",
    accumulate_safety: bool = True,
) -> PlanResult:
    """Minimum-cost path from start to goal over the clearance-filtered grid.

    Cells with d <= clearance are untraversable, as are Occupied and
    Unknown cells. Diagonal steps are forbidden when either shared
    orthogonal neighbor is untraversable (no corner cutting). With
    accumulate_safety False, the surcharge is applied to the node priority
    only instead of the accumulated G (a strictly node-local reading of
    the cost, kept for comparison; the accumulated form is the default).
    """
    w, h = grid.width, grid.height
    res = grid.resolution
    d_flat = dist.d.ravel()
    trav = (grid.cells.ravel() == FREE) & (d_flat > clearance)

    def cell_index(c: tuple[int, int]) -> int:
        return c[1] * w + c[0]

    s_idx, g_idx = cell_index(start), cell_index(goal)
    for name, (c, r) in (("start", start), ("goal", goal)):
        if not (0 <= c < w and 0 <= r < h):
            raise InvalidEndpointError(f"{name} cell ({c}, {r}) outside the map")
        if not trav[r * w + c]:
            raise InvalidEndpointError(f"{name} cell ({c}, {r}) is not traversable")

    gc, gr = goal
    cols = np.arange(w)[None, :].repeat(h, axis=0)
    rows = np.arange(h)[:, None].repeat(w, axis=1)
    h_flat = (np.hypot(cols - gc, rows - gr) * res).ravel()

    if k_safety < 0:
        raise ValueError("k_safety must be nonnegative")
    with np.errstate(divide="ignore"):
        enter_flat = np.where(trav, k_safety / d_flat, np.inf) if k_safety else np.zeros(w * h)

    g_best = np.full(w * h, np.inf)
    closed = np.zeros(w * h, dtype=bool)
    parent = np.full(w * h, -1, dtype=np.int64)

    if start == goal:
        node = PlanNode(start, 0.0, 0.0, float(enter_flat[s_idx]), None)
        return PlanResult([start], [node], 0.0, 0, [grid.cell_center(*start)])

    openl = _open_list(open_list)
    g_best[s_idx] = 0.0
    start_f = h_flat[s_idx] + (0.0 if accumulate_safety else enter_flat[s_idx])
    openl.push(start_f, float(h_flat[s_idx]), s_idx, 0.0)
    expanded = 0
    found = False

    # Locals for the hot loop.
    trav_l, h_l, enter_l, g_l, closed_l, parent_l = trav, h_flat, enter_flat, g_best, closed, parent
    diag_res = SQRT2 * res

    while len(openl):
        _f, _hh, idx, g_pop = openl.pop()
        if closed_l[idx] or g_pop > g_l[idx]:
            continue
        closed_l[idx] = True
        expanded += 1
        if idx == g_idx:
            found = True
            break
        r, c = divmod(idx, w)
        for dc, dr in _OFFSETS:
            nc = c + dc
            nr = r + dr
            if not (0 <= nc < w and 0 <= nr < h):
                continue
            nidx = nr * w + nc
            if closed_l[nidx] or not trav_l[nidx]:
                continue
            if dc != 0 and dr != 0:
                if not (trav_l[r * w + nc] and trav_l[nr * w + c]):
                    continue
                move = diag_res
            else:
                move = res
            ng = g_pop + move + (enter_l[nidx] if accumulate_safety else 0.0)
            if ng < g_l[nidx]:
                g_l[nidx] = ng
                parent_l[nidx] = idx
                nh = h_l[nidx]
                nf = ng + nh + (0.0 if accumulate_safety else enter_l[nidx])
                openl.push(nf, nh, nidx, ng)

    if not found:
        raise NoPathError(f"no path from {start} to {goal}")

    chain: list[int] = []
    at = g_idx
    while at != -1:
        chain.append(at)
        at = int(parent_l[at])
    chain.reverse()

    cells = [(i % w, i // w) for i in chain]
    nodes = []
    for j, i in enumerate(chain):
        surcharge = safety_cost(float(d_flat[i]), k_safety) if k_safety else 0.0
        nodes.append(
            PlanNode(
                cell=cells[j],
                g=float(g_l[i]),
                h=float(h_l[i]),
                s=surcharge,
                parent=cells[j - 1] if j > 0 else None,
            )
        )
    waypoints = simplify_path(cells, dist, clearance)
    return PlanResult(cells, nodes, float(g_l[g_idx]), expanded, waypoints)


def segment_clear(
    dist: DistanceField, a: tuple[float, float], b: tuple[float, float], clearance: float
) -> bool:
    """True when the segment a->b only touches cells with d > clearance.

    Exact cell-crossing traversal, so no corner clip can slip between
    samples. A crossing exactly through a cell corner conservatively
    requires both adjacent side cells to be clear as well.
    """
    res = dist.resolution
    w, h, d = dist.width, dist.height, dist.d

    def ok(col: int, row: int) -> bool:
        return 0 <= col < w and 0 <= row < h and d[row, col] > clearance

    col, row = math.floor(a[0] / res), math.floor(a[1] / res)
    end_col, end_row = math.floor(b[0] / res), math.floor(b[1] / res)
    if not ok(col, row):
        return False
    dx, dy = b[0] - a[0], b[1] - a[1]
    length = math.hypot(dx, dy)
    if length == 0.0:
        return True
    ux, uy = dx / length, dy / length
    sx = 1 if ux > 0 else -1
    sy = 1 if uy > 0 else -1
    t_dx = res / abs(ux) if ux != 0.0 else math.inf
    t_dy = res / abs(uy) if uy != 0.0 else math.inf
    t_mx = ((col + (sx > 0)) * res - a[0]) / ux if ux != 0.0 else math.inf
    t_my = ((row + (sy > 0)) * res - a[1]) / uy if uy != 0.0 else math.inf

    for _ in range(2 * (abs(end_col - col) + abs(end_row - row)) + 4):
        if (col, row) == (end_col, end_row):
            return True
        if t_mx < t_my:
            col += sx
            t_mx += t_dx
        elif t_my < t_mx:
            row += sy
            t_my += t_dy
        else:  # exact corner crossing: both side cells must be clear too
            if not (ok(col + sx, row) and ok(col, row + sy)):
                return False
            col += sx
            row += sy
            t_mx += t_dx
            t_my += t_dy
        if not ok(col, row):
            return False
    return (col, row) == (end_col, end_row)


def simplify_path(
    cells: list[tuple[int, int]], dist: DistanceField, clearance: float
) -> list[tuple[float, float]]:
    """Greedy line-of-sight shortcutting of a cell path into waypoints (meters).

    A shortcut survives only when segment_clear holds, so every surviving
    leg keeps the whole polyline in cells with d > clearance.
    """
    res = dist.resolution

    def center(cell: tuple[int, int]) -> tuple[float, float]:
        return ((cell[0] + 0.5) * res, (cell[1] + 0.5) * res)

    if len(cells) <= 2:
        return [center(c) for c in cells]

    waypoints = [center(cells[0])]
    i = 0
    while i < len(cells) - 1:
        j = len(cells) - 1
        while j > i + 1 and not segment_clear(dist, center(cells[i]), center(cells[j]), clearance):
            j -= 1
        waypoints.append(center(cells[j]))
        i = j
    return waypoints


@dataclass
class BenchRecord:
    variant: str
    width: int
    height: int
    trial: int
    cost: float
    expanded: int
    micros: int

    def line(self) -> str:
        return (
            f"variant={self.variant} map={self.width}x{self.height} trial={self.trial} "
            f"cost={self.cost} expanded={self.expanded} micros={self.micros}"
        )


@dataclass
class BenchReport:
    records: list[BenchRecord]

    def lines(self) -> list[str]:
        return [r.line() for r in self.records]

    def median_micros(self, variant: str) -> float:
        vals = sorted(r.micros for r in self.records if r.variant == variant)
        if not vals:
            raise ValueError(f"no records for variant {variant!r}")
        n = len(vals)
        mid = n // 2
        return float(vals[mid]) if n % 2 else 0.5 * (vals[mid - 1] + vals[mid])


def compare_open_lists(
    grid: GridMap,
    trials: int,
    *,
    start: tuple[int, int] | None = None,
    goal: tuple[int, int] | None = None,
    k_safety: float = 0.0,
    clearance: float = 0.0,
) -> BenchReport:
    """Time both open-list variants on identical inputs.

    Each trial runs heap then linear on the same start/goal and asserts the
    two costs (and expansion counts) agree exactly. Timing runs are
    serialized. Endpoints default to the traversable cells nearest the
    bottom-left and top-right corners.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    dist = distance_field(grid)
    if start is None:
        start = _nearest_traversable(grid, dist, (0, 0), clearance)
    if goal is None:
        goal = _nearest_traversable(grid, dist, (grid.width - 1, grid.height - 1), clearance)

    records: list[BenchRecord] = []
    for trial in range(trials):
        results = {}
        for variant in ("heap", "linear"):
            t0 = time.perf_counter()
            res = astar(
                grid, dist, start, goal,
                k_safety=k_safety, clearance=clearance, open_list=variant,
            )
            micros = int(round((time.perf_counter() - t0) * 1e6))
            results[variant] = res
            records.append(
                BenchRecord(variant, grid.width, grid.height, trial, res.total_cost, res.expanded, micros)
            )
        if results["heap"].total_cost != results["linear"].total_cost:
            raise AssertionError(
                f"open-list variants disagree on trial {trial}: "
                f"{results['heap'].total_cost} vs {results['linear'].total_cost}"
            )
        if results["heap"].expanded != results["linear"].expanded:
            raise AssertionError(f"expansion counts disagree on trial {trial}")
    return BenchReport(records)


def _nearest_traversable(
    grid: GridMap, dist: DistanceField, corner: tuple[int, int], clearance: float
) -> tuple[int, int]:
    trav = (grid.cells == FREE) & (dist.d > clearance)
    rs, cs = np.nonzero(trav)
    if len(rs) == 0:
        raise InvalidEndpointError("map has no traversable cells")
    d2 = (cs - corner[0]) ** 2 + (rs - corner[1]) ** 2
    order = np.lexsort((cs, rs, d2))  # nearest, then row-major
    i = order[0]
    return (int(cs[i]), int(rs[i]))
