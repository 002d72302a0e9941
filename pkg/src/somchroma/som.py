"""Batch Self-Organizing Map on a 2D hexagonal grid.

Training alternates best-matching-unit assignment with a neighborhood-weighted
averaging update (Gaussian kernel over planar grid distances, width sigma
decaying linearly per epoch). The neighborhood width can be chosen
automatically by minimizing a map-goodness measure that combines the distance
to the second-best unit with the shortest reference-vector path between the
best and second-best units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .dataset import DataMatrix

__all__ = [
    "DEFAULT_SIGMA_CANDIDATES",
    "SomGrid",
    "TrainConfig",
    "TrainResult",
    "hex_positions",
    "init_grid",
    "bmu",
    "bmu_indices",
    "batch_epoch",
    "sigma_schedule",
    "train",
    "quantization_error",
    "goodness",
    "select_sigma",
    "grid_to_dict",
    "grid_from_dict",
]

DEFAULT_SIGMA_CANDIDATES = (0.4, 0.7, 1.0, 1.5, 2.0)

# planar distance between lattice-adjacent hex units is exactly 1
_ADJACENCY_TOL = 1e-9


def hex_positions(rows: int, cols: int) -> np.ndarray:
    """Planar coordinates of an offset hexagonal lattice, row-major order.

    Unit (r, c) sits at x = c + 0.5*(r % 2), y = r*sqrt(3)/2, which puts every
    pair of lattice-adjacent units at distance 1.
    """
    r_idx, c_idx = np.divmod(np.arange(rows * cols), cols)
    x = c_idx + 0.5 * (r_idx % 2)
    y = r_idx * (math.sqrt(3.0) / 2.0)
    return np.column_stack([x, y]).astype(float)


@dataclass(frozen=True)
class SomGrid:
    """R x C hexagonal lattice of n-dimensional reference vectors."""

    rows: int
    cols: int
    unit_positions: np.ndarray
    reference_vectors: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.unit_positions, dtype=float)
        vec = np.asarray(self.reference_vectors, dtype=float)
        object.__setattr__(self, "unit_positions", pos)
        object.__setattr__(self, "reference_vectors", vec)
        m = self.rows * self.cols
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")
        if pos.shape != (m, 2):
            raise ValueError(f"unit_positions shape {pos.shape}, expected {(m, 2)}")
        if vec.ndim != 2 or vec.shape[0] != m:
            raise ValueError(f"reference_vectors shape {vec.shape}, expected ({m}, n)")
        if not np.all(np.isfinite(vec)):
            raise ValueError("reference vectors must be finite")

    @property
    def m(self) -> int:
        return self.rows * self.cols

    @property
    def dim(self) -> int:
        return self.reference_vectors.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    """Batch-training parameters.

    sigma_initial defaults to max(rows, cols)/2 and sigma_final to
    min(1, sigma_initial); both are resolved against the grid shape at
    training time. sigma_candidates feeds automatic selection (final sigmas
    tried with sigma_initial fixed).
    """

    epochs: int = 40
    sigma_initial: float | None = None
    sigma_final: float | None = None
    seed: int = 0
    sigma_candidates: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

    def resolved_sigmas(self, rows: int, cols: int) -> tuple[float, float]:
        si = self.sigma_initial if self.sigma_initial is not None else max(rows, cols) / 2.0
        sf = self.sigma_final if self.sigma_final is not None else min(1.0, si)
        if not (0.0 < sf <= si):
            raise ValueError(f"need 0 < sigma_final <= sigma_initial, got {sf} > {si}")
        return float(si), float(sf)

    def resolved_candidates(self, sigma_initial: float) -> tuple[float, ...]:
        if self.sigma_candidates is None:
            cands = tuple(s for s in DEFAULT_SIGMA_CANDIDATES if s <= sigma_initial)
            if not cands:
                raise ValueError(
                    f"no default sigma candidate fits sigma_initial={sigma_initial}"
                )
            return cands
        cands = tuple(float(s) for s in self.sigma_candidates)
        if not cands:
            raise ValueError("sigma_candidates must be non-empty")
        for s in cands:
            if not (0.0 < s <= sigma_initial):
                raise ValueError(
                    f"sigma candidate {s} outside (0, sigma_initial={sigma_initial}]"
                )
        return cands


@dataclass(frozen=True)
class TrainResult:
    """Trained grid plus the per-epoch sigma schedule and quantization errors."""

    grid: SomGrid
    sigmas: tuple[float, ...]
    quantization_errors: tuple[float, ...]
    seed: int


def _principal_axes(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Top-2 covariance eigenpairs (descending), deterministic signs."""
    n = values.shape[1]
    if values.shape[0] < 2:
        return np.zeros(2), np.zeros((2, n))
    cov = np.atleast_2d(np.cov(values, rowvar=False, ddof=1))
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:2]
    lams = np.zeros(2)
    axes = np.zeros((2, n))
    for k, i in enumerate(order):
        lams[k] = max(float(evals[i]), 0.0)
        v = evecs[:, i]
        j = int(np.argmax(np.abs(v)))
        axes[k] = -v if v[j] < 0 else v
    return lams, axes


def init_grid(rows: int, cols: int, data: DataMatrix, seed: int = 0) -> SomGrid:
    """Deterministic initialization on the plane of the top-2 principal components.

    Reference vectors are spread linearly across +-2 standard deviations of
    each component score, with the longer grid dimension following the first
    component. A degenerate component (rank-deficient data) falls back to a
    seeded pseudo-random direction with spread magnitude 1e-3.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid must have at least one row and one column")
    m = rows * cols
    if m > data.n_rows * 100:
        raise ValueError(
            f"{rows}x{cols} grid ({m} units) for {data.n_rows} data rows; "
            "grids more than 100x larger than the data are rejected"
        )
    values = data.values
    mean = values.mean(axis=0)
    lams, axes = _principal_axes(values)
    rng = np.random.default_rng(seed)
    thresh = lams[0] * 1e-10
    spans = np.empty(2)
    for k in range(2):
        if lams[k] <= thresh or lams[k] == 0.0:
            direction = rng.standard_normal(data.n_cols)
            norm = np.linalg.norm(direction)
            axes[k] = direction / norm if norm > 0 else np.eye(data.n_cols)[0]
            spans[k] = 1e-3
        else:
            spans[k] = 2.0 * math.sqrt(lams[k])

    t_col = np.zeros(cols) if cols == 1 else 2.0 * np.arange(cols) / (cols - 1) - 1.0
    t_row = np.zeros(rows) if rows == 1 else 2.0 * np.arange(rows) / (rows - 1) - 1.0
    # longer grid dimension follows the first (largest-variance) component
    if rows > cols:
        t1, t2 = t_row[:, None].repeat(cols, 1).ravel(), np.tile(t_col, rows)
    else:
        t1, t2 = np.tile(t_col, rows), t_row[:, None].repeat(cols, 1).ravel()
    vectors = (
        mean[None, :]
        + np.outer(t1 * spans[0], axes[0])
        + np.outer(t2 * spans[1], axes[1])
    )
    return SomGrid(rows, cols, hex_positions(rows, cols), vectors)


def _unit_distances(x: np.ndarray, grid: SomGrid) -> np.ndarray:
    diff = grid.reference_vectors - x[None, :]
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def bmu(x: np.ndarray, grid: SomGrid) -> int:
    """Index of the nearest reference vector; ties go to the lowest index."""
    x = np.asarray(x, dtype=float)
    if x.shape != (grid.dim,):
        raise ValueError(f"vector of dimension {x.shape} against grid of dim {grid.dim}")
    return int(np.argmin(_unit_distances(x, grid)))


def bmu_indices(values: np.ndarray, grid: SomGrid) -> np.ndarray:
    """Vectorized BMU lookup for every row of `values` (lowest-index ties)."""
    values = np.asarray(values, dtype=float)
    if values.shape[1] != grid.dim:
        raise ValueError(
            f"data of dimension {values.shape[1]} against grid of dim {grid.dim}"
        )
    diff = values[:, None, :] - grid.reference_vectors[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return np.argmin(sq, axis=1)


def _group_sums(values: np.ndarray, bmus: np.ndarray, m: int):
    """Per-unit sums of attracted rows and their counts.

    math.fsum gives the exactly rounded sum, so the result does not depend on
    row order and batch_epoch stays bit-identical under data permutations.
    """
    n = values.shape[1]
    sums = np.zeros((m, n))
    counts = np.zeros(m, dtype=np.int64)
    for u in range(m):
        rows = np.flatnonzero(bmus == u)
        if rows.size == 0:
            continue
        counts[u] = rows.size
        block = values[rows]
        for k in range(n):
            sums[u, k] = math.fsum(block[:, k])
    return sums, counts


def batch_epoch(grid: SomGrid, data: DataMatrix, sigma: float) -> SomGrid:
    """One batch update: every unit moves to the kernel-weighted data average.

    New vector m_i = sum_j h(c(j), i) x_j / sum_j h(c(j), i) with
    h(c, i) = exp(-||p_c - p_i||^2 / (2 sigma^2)) over planar unit positions.
    Units receiving zero total weight (all kernel values underflow) keep
    their previous vector.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    m = grid.m
    bmus = bmu_indices(data.values, grid)
    sums, counts = _group_sums(data.values, bmus, m)

    pos = grid.unit_positions
    diff = pos[:, None, :] - pos[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    with np.errstate(under="ignore"):
        kernel = np.exp(-sq / (2.0 * sigma * sigma))

    num = np.zeros_like(grid.reference_vectors)
    den = np.zeros(m)
    for u in range(m):  # fixed unit order keeps the reduction deterministic
        if counts[u] == 0:
            continue
        w = kernel[u]
        num += w[:, None] * sums[u]
        den += w * counts[u]

    vectors = grid.reference_vectors.copy()
    alive = den > 0.0
    vectors[alive] = num[alive] / den[alive, None]
    return SomGrid(grid.rows, grid.cols, grid.unit_positions, vectors)


def sigma_schedule(sigma_initial: float, sigma_final: float, epochs: int) -> tuple[float, ...]:
    """Linear decay from sigma_initial to sigma_final over `epochs` epochs."""
    if epochs == 1:
        return (float(sigma_initial),)
    steps = np.arange(epochs) / (epochs - 1)
    return tuple(float(s) for s in sigma_initial + (sigma_final - sigma_initial) * steps)


def train(data: DataMatrix, rows: int, cols: int, config: TrainConfig) -> TrainResult:
    """Run the full batch schedule; deterministic given data and config."""
    si, sf = config.resolved_sigmas(rows, cols)
    sigmas = sigma_schedule(si, sf, config.epochs)
    grid = init_grid(rows, cols, data, config.seed)
    errors = []
    for sigma in sigmas:
        grid = batch_epoch(grid, data, sigma)
        errors.append(quantization_error(grid, data))
    return TrainResult(grid, sigmas, tuple(errors), config.seed)


def quantization_error(grid: SomGrid, data: DataMatrix) -> float:
    """Mean distance from each data point to its best-matching unit."""
    bmus = bmu_indices(data.values, grid)
    diff = data.values - grid.reference_vectors[bmus]
    return float(np.mean(np.sqrt(np.einsum("ij,ij->i", diff, diff))))


def _adjacency_pairs(grid: SomGrid) -> np.ndarray:
    pos = grid.unit_positions
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    i, j = np.nonzero(np.abs(dist - 1.0) <= _ADJACENCY_TOL)
    keep = i < j
    return np.column_stack([i[keep], j[keep]])


def _reference_path_lengths(grid: SomGrid) -> np.ndarray:
    """All-pairs shortest paths over the hex adjacency graph.

    Edge weights are input-space distances between adjacent units' reference
    vectors; computed exactly with Dijkstra.
    """
    pairs = _adjacency_pairs(grid)
    vec = grid.reference_vectors
    w = np.linalg.norm(vec[pairs[:, 0]] - vec[pairs[:, 1]], axis=1)
    graph = csr_matrix(
        (np.concatenate([w, w]),
         (np.concatenate([pairs[:, 0], pairs[:, 1]]),
          np.concatenate([pairs[:, 1], pairs[:, 0]]))),
        shape=(grid.m, grid.m),
    )
    return dijkstra(graph, directed=False)


def goodness(grid: SomGrid, data: DataMatrix) -> float:
    """Map-goodness measure over the data (lower is better).

    For each data point: distance to its second-nearest unit plus the
    shortest path from the best to the second-best unit, where path steps
    move between lattice-adjacent units and cost the input-space distance
    between their reference vectors.
    """
    if grid.m < 2:
        raise ValueError("goodness needs at least 2 units (second-best undefined)")
    values = data.values
    diff = values[:, None, :] - grid.reference_vectors[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    order = np.argsort(dist, axis=1, kind="stable")  # ties resolved to lower index
    best = order[:, 0]
    second = order[:, 1]
    second_dist = dist[np.arange(values.shape[0]), second]
    paths = _reference_path_lengths(grid)
    path_dist = paths[best, second]
    return float(np.mean(second_dist + path_dist))


def select_sigma(
    data: DataMatrix, rows: int, cols: int, config: TrainConfig
) -> tuple[float, TrainResult]:
    """Train one SOM per candidate final sigma and keep the best map.

    Returns the candidate minimizing goodness together with its trained
    result; goodness ties within 1e-12 resolve to the smaller sigma.
    """
    si = config.sigma_initial if config.sigma_initial is not None else max(rows, cols) / 2.0
    si = float(si)
    candidates = sorted(config.resolved_candidates(si))
    results = []
    for sf in candidates:
        run = TrainConfig(
            epochs=config.epochs, sigma_initial=si, sigma_final=sf, seed=config.seed
        )
        result = train(data, rows, cols, run)
        results.append((sf, result, goodness(result.grid, data)))
    best_g = min(g for _, _, g in results)
    for sf, result, g in results:  # ascending sigma: first within tolerance wins
        if g <= best_g + 1e-12:
            return sf, result
    raise AssertionError("unreachable")


def grid_to_dict(grid: SomGrid, training_metadata: dict) -> dict:
    """JSON-ready grid payload (positions are implied by rows/cols)."""
    return {
        "schema_version": 1,
        "kind": "som_grid",
        "rows": grid.rows,
        "cols": grid.cols,
        "dim": grid.dim,
        "reference_vectors": [[float(v) for v in row] for row in grid.reference_vectors],
        "training_metadata": training_metadata,
    }


def grid_from_dict(payload: dict) -> tuple[SomGrid, dict]:
    """Inverse of grid_to_dict; validates the schema envelope."""
    if payload.get("kind") != "som_grid" or payload.get("schema_version") != 1:
        raise ValueError(
            "schema version mismatch: expected som_grid v1, got "
            f"kind={payload.get('kind')!r} schema_version={payload.get('schema_version')!r}"
        )
    rows, cols = int(payload["rows"]), int(payload["cols"])
    vectors = np.asarray(payload["reference_vectors"], dtype=float)
    grid = SomGrid(rows, cols, hex_positions(rows, cols), vectors)
    if grid.dim != int(payload["dim"]):
        raise ValueError(f"dim field {payload['dim']} does not match vectors {grid.dim}")
    return grid, dict(payload.get("training_metadata", {}))
