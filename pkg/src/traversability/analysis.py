"""
Traversability analysis on a dense terrain model.

Normals come from central differences of the elevation field. Two 4-adjacent
cells i, j with positions p and normals n form a traversable edge when

    n_i · v_ij / |v_ij| <= cos T_θ
    n_j · v_ji / |v_ji| <= cos T_θ
    n_i · n_j          >= cos T_α

with v_ij = p_j − p_i. A cell is Traversable when it has a normal and at
least one of its edges passes; its travel cost is

    C = 1/(3m) Σ_j [ n_i·v_ij/(|v| cos T_θ) + n_j·v_ji/(|v| cos T_θ) + cos T_α/(n_i·n_j) ]

over the m neighbours j whose edge passes. A cell whose edges all fail is
NonTraversable. Reachability grows from seeds near the vehicle across
passing edges only, so a cell at the foot of a curb stays Traversable while
the curb face does not join it to the top.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ..bgk.inference import TerrainModel
from ..geometry.core import GridIndex, InvalidArgumentError

logger = logging.getLogger(__name__)


class TraversabilityError(Exception):
    """Base exception for traversability analysis."""
    pass


class UndefinedNormalError(TraversabilityError):
    """Raised when a cell's 4-neighbourhood is incomplete."""
    pass


class NoCostError(TraversabilityError):
    """Raised when a travel cost is requested without traversable neighbours."""
    pass


class TraversabilityLabel(IntEnum):
    UNKNOWN = 0
    TRAVERSABLE = 1
    NON_TRAVERSABLE = 2
    UNREACHABLE = 3


@dataclass(frozen=True)
class KinematicLimits:
    """
    Vehicle limits for the edge test.

    Attributes:
        similarity_angle_deg: T_α, maximum angle between neighbouring normals
        concavity_angle_deg: T_θ, bound on the angle between a normal and the
            displacement to a neighbour
        lidar_height: LiDAR mounting height above the ground (m)
    """
    similarity_angle_deg: float = 10.0
    concavity_angle_deg: float = 80.0
    lidar_height: float = 1.73

    def __post_init__(self):
        if not 0.0 < self.similarity_angle_deg < 90.0:
            raise InvalidArgumentError("T_α must lie in (0, 90) degrees")
        if not 0.0 < self.concavity_angle_deg < 90.0:
            raise InvalidArgumentError("T_θ must lie in (0, 90) degrees")

    @property
    def cos_alpha(self) -> float:
        return math.cos(math.radians(self.similarity_angle_deg))

    @property
    def cos_theta(self) -> float:
        return math.cos(math.radians(self.concavity_angle_deg))

    @property
    def flat_cost(self) -> float:
        """Cost of a cell on level ground."""
        return self.cos_alpha / 3.0


@dataclass(frozen=True, eq=False)
class NormalField:
    """N x N x 3 unit normals, NaN where ``valid`` is False."""
    vectors: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class CellGeometry:
    """Position (x, y, elevation) and unit normal of one cell."""
    position: Tuple[float, float, float]
    normal: Tuple[float, float, float]


@dataclass(frozen=True, eq=False)
class CostMap:
    """
    Per-cell traversability label and travel cost (NaN unless Traversable).

    ``east_ok``/``south_ok`` hold the passing edges (same layout as
    ``EdgeMasks``) when the map came from a terrain model; maps rebuilt from
    costs alone leave them None and treat every pair of Traversable
    neighbours as joined.
    """
    labels: np.ndarray
    cost: np.ndarray
    cell_size: float = 0.2
    east_ok: Optional[np.ndarray] = None
    south_ok: Optional[np.ndarray] = None

    @property
    def has_edges(self) -> bool:
        return self.east_ok is not None and self.south_ok is not None

    def edge_ok(self, a: Tuple[int, int], b: Tuple[int, int]) -> bool:
        """Whether 4-adjacent cells ``a`` and ``b`` share a passing edge."""
        (r0, c0), (r1, c1) = sorted((a, b))
        if abs(r1 - r0) + abs(c1 - c0) != 1:
            raise InvalidArgumentError(f"Cells {a} and {b} are not 4-adjacent")
        if not self.has_edges:
            return bool(self.traversable[r0, c0] and self.traversable[r1, c1])
        if r0 == r1:
            return bool(self.east_ok[r0, c0])
        return bool(self.south_ok[r0, c0])

    @property
    def side_cells(self) -> int:
        return int(self.labels.shape[0])

    @property
    def traversable(self) -> np.ndarray:
        return self.labels == TraversabilityLabel.TRAVERSABLE

    def label_at(self, index: GridIndex) -> TraversabilityLabel:
        return TraversabilityLabel(int(self.labels[index.row, index.col]))

    def cost_with_sentinel(self, sentinel: float = -999.0) -> np.ndarray:
        return np.where(self.traversable, self.cost, sentinel)

    @classmethod
    def from_costs(cls, cost: np.ndarray, cell_size: float = 0.2) -> "CostMap":
        """Cost map where every finite entry is a Traversable cell."""
        cost = np.asarray(cost, dtype=float)
        ok = np.isfinite(cost)
        labels = np.where(ok, TraversabilityLabel.TRAVERSABLE,
                          TraversabilityLabel.NON_TRAVERSABLE).astype(np.int8)
        return cls(labels=labels, cost=np.where(ok, cost, np.nan), cell_size=cell_size)


def compute_normals(model: TerrainModel) -> NormalField:
    """
    Normals from the central differences of the elevation field.

    Rows grow southward, so the north neighbour of (R, C) is (R-1, C).
    Border cells and cells with an invalid 4-neighbour get no normal.
    """
    h = np.asarray(model.elevation, dtype=float)
    valid = np.asarray(model.valid, dtype=bool) & np.isfinite(h)
    n = h.shape[0]
    omega = model.cell_size
    vectors = np.full((n, n, 3), np.nan)
    ok = np.zeros((n, n), dtype=bool)
    if n < 3:
        return NormalField(vectors=vectors, valid=ok)

    inner = (valid[1:-1, 2:] & valid[1:-1, :-2] & valid[:-2, 1:-1] & valid[2:, 1:-1])
    dx = h[1:-1, 2:] - h[1:-1, :-2]
    dy = h[:-2, 1:-1] - h[2:, 1:-1]
    # (2ω, 0, dx) x (0, 2ω, dy)
    nx = -2.0 * omega * dx
    ny = -2.0 * omega * dy
    nz = np.full_like(dx, 4.0 * omega * omega)
    norm = np.sqrt(nx * nx + ny * ny + nz * nz)
    block = np.stack([nx / norm, ny / norm, nz / norm], axis=-1)
    block[~inner] = np.nan
    vectors[1:-1, 1:-1] = block
    ok[1:-1, 1:-1] = inner
    return NormalField(vectors=vectors, valid=ok)


def compute_normal(model: TerrainModel, cell: GridIndex) -> np.ndarray:
    """
    Unit normal of one cell.

    Raises:
        UndefinedNormalError: If any 4-neighbour is missing or invalid
    """
    n = model.side_cells
    r, c = cell.row, cell.col
    if not (1 <= r < n - 1 and 1 <= c < n - 1):
        raise UndefinedNormalError(f"Cell {cell} lies on the map border")
    h = model.elevation
    neighbours = [(r, c + 1), (r, c - 1), (r - 1, c), (r + 1, c)]
    if not all(model.valid[i, j] and np.isfinite(h[i, j]) for i, j in neighbours):
        raise UndefinedNormalError(f"Cell {cell} has an invalid neighbour")
    omega = model.cell_size
    east_west = np.array([2.0 * omega, 0.0, h[r, c + 1] - h[r, c - 1]])
    north_south = np.array([0.0, 2.0 * omega, h[r - 1, c] - h[r + 1, c]])
    normal = np.cross(east_west, north_south)
    normal /= np.linalg.norm(normal)
    if normal[2] < 0:
        normal = -normal
    return normal


def _edge_terms(ni, nj, v):
    length = np.linalg.norm(v, axis=-1)
    d_ij = np.sum(ni * v, axis=-1) / length
    d_ji = -np.sum(nj * v, axis=-1) / length
    sim = np.sum(ni * nj, axis=-1)
    return d_ij, d_ji, sim


def edge_traversable(i: CellGeometry, j: CellGeometry, limits: KinematicLimits) -> bool:
    """Local convexity test between two adjacent cells."""
    v = np.asarray(j.position, dtype=float) - np.asarray(i.position, dtype=float)
    d_ij, d_ji, sim = _edge_terms(np.asarray(i.normal, dtype=float), np.asarray(j.normal, dtype=float), v)
    return bool(d_ij <= limits.cos_theta and d_ji <= limits.cos_theta and sim >= limits.cos_alpha)


def travel_cost(cell: CellGeometry, traversable_neighbors: Sequence[CellGeometry],
                limits: KinematicLimits) -> float:
    """
    Average concavity and similarity cost over the traversable neighbours.

    Raises:
        NoCostError: If there are no neighbours
    """
    if not traversable_neighbors:
        raise NoCostError("Travel cost needs at least one traversable neighbour")
    total = 0.0
    ni = np.asarray(cell.normal, dtype=float)
    for nb in traversable_neighbors:
        v = np.asarray(nb.position, dtype=float) - np.asarray(cell.position, dtype=float)
        d_ij, d_ji, sim = _edge_terms(ni, np.asarray(nb.normal, dtype=float), v)
        total += d_ij / limits.cos_theta + d_ji / limits.cos_theta + limits.cos_alpha / sim
    return float(total / (3.0 * len(traversable_neighbors)))


@dataclass(frozen=True, eq=False)
class EdgeMasks:
    """
    Edge test results.

    ``east[r, c]`` concerns the edge (r, c)-(r, c+1); ``south[r, c]`` the edge
    (r, c)-(r+1, c). ``*_present`` marks edges whose both ends have normals.
    """
    east_present: np.ndarray
    east_ok: np.ndarray
    east_terms: np.ndarray
    south_present: np.ndarray
    south_ok: np.ndarray
    south_terms: np.ndarray


def edge_masks(model: TerrainModel, normals: NormalField, limits: KinematicLimits) -> EdgeMasks:
    """Evaluate the convexity test on every horizontal and vertical edge."""
    h = model.elevation
    nv = normals.valid
    vec = normals.vectors
    omega = model.cell_size
    cos_t = limits.cos_theta
    cos_a = limits.cos_alpha

    with np.errstate(invalid='ignore', divide='ignore'):
        # east neighbour: +x
        v_e = np.stack([np.full(h[:, 1:].shape, omega), np.zeros(h[:, 1:].shape), h[:, 1:] - h[:, :-1]], axis=-1)
        d1, d2, sim = _edge_terms(vec[:, :-1], vec[:, 1:], v_e)
        east_present = nv[:, :-1] & nv[:, 1:]
        east_ok = east_present & (d1 <= cos_t) & (d2 <= cos_t) & (sim >= cos_a)
        east_terms = np.where(east_present, d1 / cos_t + d2 / cos_t + cos_a / sim, 0.0)

        # south neighbour: -y
        v_s = np.stack([np.zeros(h[1:].shape), np.full(h[1:].shape, -omega), h[1:] - h[:-1]], axis=-1)
        d1, d2, sim = _edge_terms(vec[:-1], vec[1:], v_s)
        south_present = nv[:-1] & nv[1:]
        south_ok = south_present & (d1 <= cos_t) & (d2 <= cos_t) & (sim >= cos_a)
        south_terms = np.where(south_present, d1 / cos_t + d2 / cos_t + cos_a / sim, 0.0)

    return EdgeMasks(east_present, east_ok, east_terms, south_present, south_ok, south_terms)


def label_cells(model: TerrainModel, normals: NormalField, limits: KinematicLimits) -> CostMap:
    """
    Label every cell and compute travel costs, before reachability.

    Obstacle cells are NonTraversable and edges touching them never pass.
    Cells with a normal and no passing edge are NonTraversable when some
    neighbour has a normal; cells without a normal, or whose neighbours all
    lack one, are Unknown.
    """
    n = model.side_cells
    edges = edge_masks(model, normals, limits)
    obstacle = np.asarray(model.obstacle, dtype=bool)
    east_ok = edges.east_ok & ~obstacle[:, :-1] & ~obstacle[:, 1:]
    south_ok = edges.south_ok & ~obstacle[:-1] & ~obstacle[1:]

    present = np.zeros((n, n), dtype=np.int32)
    passed = np.zeros((n, n), dtype=np.int32)
    terms = np.zeros((n, n), dtype=float)
    for mask, ok, t, a, b in (
        (edges.east_present, east_ok, edges.east_terms, (slice(None), slice(None, -1)), (slice(None), slice(1, None))),
        (edges.south_present, south_ok, edges.south_terms, (slice(None, -1), slice(None)), (slice(1, None), slice(None))),
    ):
        present[a] += mask
        present[b] += mask
        passed[a] += ok
        passed[b] += ok
        passing_terms = np.where(ok, t, 0.0)
        terms[a] += passing_terms
        terms[b] += passing_terms

    has_normal = normals.valid
    traversable = has_normal & (passed > 0)
    failing = has_normal & (present > 0) & (passed == 0)

    labels = np.full((n, n), TraversabilityLabel.UNKNOWN, dtype=np.int8)
    labels[failing] = TraversabilityLabel.NON_TRAVERSABLE
    labels[traversable] = TraversabilityLabel.TRAVERSABLE
    labels[obstacle] = TraversabilityLabel.NON_TRAVERSABLE

    cost = np.full((n, n), np.nan)
    final = labels == TraversabilityLabel.TRAVERSABLE
    cost[final] = terms[final] / (3.0 * passed[final])
    return CostMap(labels=labels, cost=cost, cell_size=model.cell_size,
                   east_ok=east_ok, south_ok=south_ok)


def attach_edges(costmap: CostMap, model: TerrainModel, limits: KinematicLimits) -> CostMap:
    """
    Cost map with the passing edges of ``model``, for maps rebuilt from
    stored costs.

    Raises:
        InvalidArgumentError: If the model and the cost map differ in shape
    """
    if model.elevation.shape != costmap.labels.shape:
        raise InvalidArgumentError(f"Elevation grid {model.elevation.shape} does not match "
                                   f"cost grid {costmap.labels.shape}")
    edges = edge_masks(model, compute_normals(model), limits)
    return replace(costmap, east_ok=edges.east_ok, south_ok=edges.south_ok)


def grow_regions(traversable: np.ndarray, seeds: Iterable[GridIndex],
                 east_ok: Optional[np.ndarray] = None,
                 south_ok: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Cells connected to any seed through traversable cells.

    Two 4-adjacent traversable cells are joined unless an edge mask is given
    and marks their edge as failing. Seeds outside the traversable set are
    ignored.
    """
    traversable = np.asarray(traversable, dtype=bool)
    rows, cols = traversable.shape
    east = traversable[:, :-1] & traversable[:, 1:]
    south = traversable[:-1] & traversable[1:]
    if east_ok is not None:
        east = east & np.asarray(east_ok, dtype=bool)
    if south_ok is not None:
        south = south & np.asarray(south_ok, dtype=bool)

    index = np.arange(rows * cols).reshape(rows, cols)
    src = np.concatenate([index[:, :-1][east], index[:-1][south]])
    dst = np.concatenate([index[:, 1:][east], index[1:][south]])
    graph = sparse.coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)),
                              shape=(rows * cols, rows * cols))
    _, components = csgraph.connected_components(graph, directed=False)
    components = components.reshape(rows, cols)

    keep = {int(components[s.row, s.col]) for s in seeds if traversable[s.row, s.col]}
    if not keep:
        return np.zeros_like(traversable)
    return traversable & np.isin(components, sorted(keep))


def seed_cells(costmap: CostMap, model: TerrainModel, limits: KinematicLimits,
               vehicle_cell: GridIndex, lidar_z: float, height_tolerance: float) -> List[GridIndex]:
    """
    Traversable cells in the 3 x 3 window around the vehicle whose elevation
    is within ``height_tolerance`` of the expected ground (LiDAR z minus
    mounting height).
    """
    ground = lidar_z - limits.lidar_height
    n = costmap.side_cells
    seeds = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r, c = vehicle_cell.row + dr, vehicle_cell.col + dc
            if not (0 <= r < n and 0 <= c < n):
                continue
            if costmap.labels[r, c] != TraversabilityLabel.TRAVERSABLE:
                continue
            if abs(model.elevation[r, c] - ground) <= height_tolerance:
                seeds.append(GridIndex(r, c))
    return seeds


def region_grow(costmap: CostMap, model: TerrainModel, limits: KinematicLimits,
                vehicle_cell: GridIndex, lidar_z: Optional[float] = None,
                height_tolerance: float = 0.4) -> CostMap:
    """
    Mark Traversable cells not connected to the vehicle as Unreachable.

    Args:
        costmap: Labels from ``label_cells``
        model: Terrain model the labels came from
        limits: Kinematic limits (LiDAR mounting height)
        vehicle_cell: Cell under the LiDAR
        lidar_z: LiDAR elevation; defaults to the model's
        height_tolerance: Seed elevation tolerance (T_h)

    Returns:
        New CostMap; with no valid seed every Traversable cell becomes Unreachable
    """
    z = model.lidar_z if lidar_z is None else lidar_z
    seeds = seed_cells(costmap, model, limits, vehicle_cell, z, height_tolerance)
    traversable = costmap.traversable
    if not seeds:
        logger.warning(f"No valid seed near vehicle cell ({vehicle_cell.row}, {vehicle_cell.col}); "
                       f"all {int(traversable.sum())} traversable cells marked unreachable")
        reachable = np.zeros_like(traversable)
    else:
        reachable = grow_regions(traversable, seeds, costmap.east_ok, costmap.south_ok)

    labels = costmap.labels.copy()
    stranded = traversable & ~reachable
    labels[stranded] = TraversabilityLabel.UNREACHABLE
    cost = np.where(reachable, costmap.cost, np.nan)
    return replace(costmap, labels=labels, cost=cost)


def analyze_terrain(model: TerrainModel, limits: KinematicLimits, vehicle_cell: GridIndex,
                    height_tolerance: float = 0.4) -> CostMap:
    """Normals, labels, costs and reachability in one call."""
    normals = compute_normals(model)
    costmap = label_cells(model, normals, limits)
    return region_grow(costmap, model, limits, vehicle_cell, model.lidar_z, height_tolerance)
