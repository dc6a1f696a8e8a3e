"""Point clouds: synthetic manifold samples, file IO, and node-spacing statistics."""

import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

_MAGIC = b"PCLD"


@dataclass(frozen=True, eq=False)
class PointCloud:
    """n points in R^dim, one per row."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("no points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite coordinates in point cloud")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class SpacingStats:
    """Worst-case and typical node spacing of an interpolation node set."""

    fill_distance: float
    local_fill_distance: float


def sample_sphere(n: int, sphere_dim: int, quadrant_only: bool = False, seed: int = 0) -> PointCloud:
    """Draw n points uniformly from the unit sphere S^sphere_dim in R^(sphere_dim+1).

    Sampling normalizes standard Gaussian vectors, which is rejection-free and
    exactly uniform. With quadrant_only the points are folded into the
    nonnegative orthant by taking absolute values; the fold preserves
    uniformity on that patch.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sphere_dim < 1:
        raise ValueError("sphere_dim must be >= 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, sphere_dim + 1))
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # essentially impossible; keeps rows exactly unit
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), sphere_dim + 1))
        norms = np.linalg.norm(g, axis=1)
    pts = g / norms[:, None]
    if quadrant_only:
        pts = np.abs(pts)
    return PointCloud(pts)


def random_unitary_embed(cloud: PointCloud, target_dim: int, seed: int = 0) -> PointCloud:
    """Embed a cloud isometrically into R^target_dim with a Haar orthogonal map.

    The map is the first cloud.dim rows of a target_dim x target_dim orthogonal
    matrix drawn from the Haar distribution (QR of a Gaussian matrix with the
    sign of R's diagonal fixed), so pairwise distances are preserved.
    """
    if target_dim < cloud.dim:
        raise ValueError(f"target_dim {target_dim} < cloud dimension {cloud.dim}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((target_dim, target_dim))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    q = q * signs[None, :]
    return PointCloud(cloud.points @ q[: cloud.dim, :])


def local_fill_distance(nodes: PointCloud) -> float:
    """Mean distance from each node to its nearest other node.

    Well defined for duplicate points (their nearest-neighbor distance is 0);
    duplicates only trigger a warning because downstream scale heuristics
    divide by this value.
    """
    if nodes.n < 2:
        raise ValueError("local fill distance needs at least 2 nodes")
    d = squareform(pdist(nodes.points))
    np.fill_diagonal(d, np.inf)
    nearest = d.min(axis=1)
    if np.any(nearest == 0.0):
        warnings.warn("duplicate points in node set; local fill distance includes zeros")
    return float(nearest.mean())


def fill_distance(nodes: PointCloud, domain_samples: PointCloud) -> float:
    """Largest distance from any domain sample to its nearest node.

    Discrete proxy for the sup over the continuous domain; tight only when the
    samples cover the domain well.
    """
    if nodes.dim != domain_samples.dim:
        raise ValueError(f"dimension mismatch: nodes in R^{nodes.dim}, domain samples in R^{domain_samples.dim}")
    d = cdist(domain_samples.points, nodes.points)
    return float(d.min(axis=1).max())


def spacing_stats(nodes: PointCloud, domain_samples: PointCloud) -> SpacingStats:
    """Both spacing measures of a node set against a set of domain samples."""
    return SpacingStats(
        fill_distance=fill_distance(nodes, domain_samples),
        local_fill_distance=local_fill_distance(nodes),
    )


def save_cloud(cloud: PointCloud, path, format: str | None = None) -> None:
    """Write a cloud to `path` as csv or binary (inferred from a .csv suffix)."""
    path = Path(path)
    format = format or ("csv" if path.suffix == ".csv" else "binary")
    if format == "binary":
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<QQ", cloud.n, cloud.dim))
            f.write(np.ascontiguousarray(cloud.points, dtype="<f8").tobytes())
    elif format == "csv":
        with open(path, "w") as f:
            f.write(f"# {cloud.n} points in R^{cloud.dim}\n")
            for row in cloud.points:
                f.write(",".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")


def load_cloud(path, format: str | None = None, dim: int | None = None) -> PointCloud:
    """Read a cloud written by save_cloud; `dim`, when given, is enforced."""
    path = Path(path)
    format = format or ("csv" if path.suffix == ".csv" else "binary")
    if format == "binary":
        cloud = _load_binary(path)
    elif format == "csv":
        cloud = _load_csv(path)
    else:
        raise ValueError(f"unknown format {format!r}")
    if dim is not None and cloud.dim != dim:
        raise ValueError(f"ragged table: points have {cloud.dim} fields, expected {dim}")
    return cloud


def _load_binary(path: Path) -> PointCloud:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}: not a point-cloud file")
        header = f.read(16)
        if len(header) < 16:
            raise ValueError("no points")
        n, dim = struct.unpack("<QQ", header)
        if n < 1 or dim < 1:
            raise ValueError("no points")
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != n * dim:
        raise ValueError(f"truncated point-cloud file: expected {n * dim} values, found {data.size}")
    return PointCloud(data.reshape(n, dim).copy())


def _load_csv(path: Path) -> PointCloud:
    rows = []
    width = None
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            try:
                row = [float(v) for v in fields]
            except ValueError:
                raise ValueError(f"non-numeric field at line {lineno}") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"ragged table: line {lineno} has {len(row)} fields, expected {width}")
            rows.append(row)
    if not rows:
        raise ValueError("no points")
    return PointCloud(np.array(rows))
