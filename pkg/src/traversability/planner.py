"""
Cost-aware grid A* over a traversability cost map.

Moves are 8-connected. A step into cell j costs its length (ω or ω√2) plus
λ·cost(j); diagonal steps also need both orthogonal cells to be Traversable.
When the map carries edge results, moves never cross a failing edge. The
Euclidean heuristic ignores the cost term, so it stays admissible.
"""

import heapq
import itertools
import math
from typing import Dict, List, Sequence, Tuple

from ..geometry.core import GridIndex
from .analysis import CostMap, TraversabilityError

SQRT2 = math.sqrt(2.0)
MOVES: Tuple[Tuple[int, int], ...] = (
    (-1, 0), (1, 0), (0, -1), (0, 1),
    (-1, -1), (-1, 1), (1, -1), (1, 1),
)


class PathInfeasibleError(TraversabilityError):
    """Raised when no path connects start and goal."""
    pass


def _step_length(dr: int, dc: int, cell_size: float) -> float:
    return cell_size * (SQRT2 if dr and dc else 1.0)


def neighbours(costmap: CostMap, row: int, col: int):
    """
    Yield (row, col, dr, dc) of the legal moves out of a cell.

    An orthogonal move needs a passing edge. A diagonal move needs both
    orthogonal cells Traversable and both two-step routes around the corner
    to cross passing edges.
    """
    traversable = costmap.traversable
    n_rows, n_cols = traversable.shape
    here = (row, col)
    for dr, dc in MOVES:
        r, c = row + dr, col + dc
        if not (0 <= r < n_rows and 0 <= c < n_cols) or not traversable[r, c]:
            continue
        if not (dr and dc):
            if costmap.edge_ok(here, (r, c)):
                yield r, c, dr, dc
            continue
        side_row, side_col = (row + dr, col), (row, col + dc)
        if not (traversable[side_row] and traversable[side_col]):
            continue
        if (costmap.edge_ok(here, side_row) and costmap.edge_ok(side_row, (r, c))
                and costmap.edge_ok(here, side_col) and costmap.edge_ok(side_col, (r, c))):
            yield r, c, dr, dc


def plan_path(costmap: CostMap, start: GridIndex, goal: GridIndex,
              cost_weight: float = 5.0) -> List[GridIndex]:
    """
    Minimum-cost path from ``start`` to ``goal``.

    Args:
        costmap: Map with Traversable labels and costs
        start: Start cell
        goal: Goal cell
        cost_weight: λ, weight of the travel cost against path length

    Returns:
        Cells from start to goal inclusive

    Raises:
        PathInfeasibleError: If start or goal is not Traversable, or they are
            not connected
    """
    traversable = costmap.traversable
    n_rows, n_cols = traversable.shape
    for name, cell in (("start", start), ("goal", goal)):
        if not (0 <= cell.row < n_rows and 0 <= cell.col < n_cols):
            raise PathInfeasibleError(f"{name} {cell} lies outside the map")
        if not traversable[cell.row, cell.col]:
            raise PathInfeasibleError(f"{name} {cell} is not traversable")

    omega = costmap.cell_size
    cost = costmap.cost
    goal_rc = (goal.row, goal.col)

    def heuristic(r: int, c: int) -> float:
        return omega * math.hypot(r - goal.row, c - goal.col)

    counter = itertools.count()
    g_score: Dict[Tuple[int, int], float] = {(start.row, start.col): 0.0}
    parent: Dict[Tuple[int, int], Tuple[int, int]] = {}
    closed = set()
    heap = [(heuristic(start.row, start.col), next(counter), start.row, start.col)]

    while heap:
        _, _, r, c = heapq.heappop(heap)
        if (r, c) in closed:
            continue
        if (r, c) == goal_rc:
            return _reconstruct(parent, goal_rc)
        closed.add((r, c))
        g = g_score[(r, c)]
        for nr, nc, dr, dc in neighbours(costmap, r, c):
            if (nr, nc) in closed:
                continue
            candidate = g + _step_length(dr, dc, omega) + cost_weight * float(cost[nr, nc])
            if candidate < g_score.get((nr, nc), math.inf):
                g_score[(nr, nc)] = candidate
                parent[(nr, nc)] = (r, c)
                heapq.heappush(heap, (candidate + heuristic(nr, nc), next(counter), nr, nc))

    raise PathInfeasibleError(f"No path from {start} to {goal}")


def _reconstruct(parent: Dict[Tuple[int, int], Tuple[int, int]], end: Tuple[int, int]) -> List[GridIndex]:
    path = [end]
    while path[-1] in parent:
        path.append(parent[path[-1]])
    path.reverse()
    return [GridIndex(r, c) for r, c in path]


def path_cost(costmap: CostMap, path: Sequence[GridIndex], cost_weight: float = 5.0) -> float:
    """Objective value of a path: Σ (step length + λ·cost of the entered cell)."""
    total = 0.0
    for a, b in zip(path, path[1:]):
        dr, dc = b.row - a.row, b.col - a.col
        if max(abs(dr), abs(dc)) != 1:
            raise PathInfeasibleError(f"Cells {a} and {b} are not adjacent")
        total += _step_length(dr, dc, costmap.cell_size) + cost_weight * float(costmap.cost[b.row, b.col])
    return total
