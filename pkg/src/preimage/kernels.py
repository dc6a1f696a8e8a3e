"""Radial kernels, kernel-matrix assembly, sparsification, and conditioning diagnostics."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .dataset import PointCloud

GAUSSIAN = "gaussian"
RADIAL_POWER = "radial_power"
THIN_PLATE = "thin_plate"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its shape parameters.

    gaussian:      exp(-epsilon^2 r^2) with epsilon > 0
    radial_power:  r^rho with odd rho >= 1 (rho=3 is the cubic)
    thin_plate:    r^rho log r with even rho >= 2
    """

    family: str
    epsilon: float | None = None
    rho: int | None = None

    def __post_init__(self):
        if self.family == GAUSSIAN:
            if self.epsilon is None or not self.epsilon > 0:
                raise ValueError("gaussian kernel requires epsilon > 0")
            if self.rho is not None:
                raise ValueError("rho is not a gaussian parameter")
        elif self.family == RADIAL_POWER:
            if self.rho is None or self.rho < 1 or self.rho % 2 == 0:
                raise ValueError("radial_power requires odd rho >= 1")
            if self.epsilon is not None:
                raise ValueError("radial powers are scale-free; epsilon not allowed")
        elif self.family == THIN_PLATE:
            if self.rho is None or self.rho < 2 or self.rho % 2 == 1:
                raise ValueError("thin_plate requires even rho >= 2")
            if self.epsilon is not None:
                raise ValueError("thin plate splines are scale-free; epsilon not allowed")
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.epsilon is not None:
            d["epsilon"] = float(self.epsilon)
        if self.rho is not None:
            d["rho"] = int(self.rho)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["family"], epsilon=d.get("epsilon"), rho=d.get("rho"))


def gaussian(epsilon: float) -> KernelSpec:
    return KernelSpec(GAUSSIAN, epsilon=float(epsilon))


def radial_power(rho: int) -> KernelSpec:
    return KernelSpec(RADIAL_POWER, rho=int(rho))


def cubic() -> KernelSpec:
    return radial_power(3)


def thin_plate(rho: int = 2) -> KernelSpec:
    return KernelSpec(THIN_PLATE, rho=int(rho))


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Matrix of kernel values k(a_i, b_j); symmetric when both sets coincide."""

    entries: np.ndarray
    symmetric: bool = False

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def eval_kernel(spec: KernelSpec, r):
    """Evaluate the radial profile g(r) elementwise; r may be a scalar or array."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("negative distance")
    if spec.family == GAUSSIAN:
        out = np.exp(-(spec.epsilon**2) * arr * arr)
    elif spec.family == RADIAL_POWER:
        out = arr**spec.rho
    else:
        # continuous extension: r^rho log r -> 0 as r -> 0
        safe = np.where(arr > 0, arr, 1.0)
        out = np.where(arr > 0, safe**spec.rho * np.log(safe), 0.0)
    return float(out) if np.isscalar(r) or arr.ndim == 0 else out


def kernel_matrix(spec: KernelSpec, a: PointCloud, b: PointCloud | None = None) -> KernelMatrix:
    """Assemble entries k(a_i, b_j).

    When b is omitted or equals a, each unordered pair is computed once and
    mirrored, so the result is exactly symmetric.
    """
    if b is None or b is a or (a.n == b.n and a.dim == b.dim and np.array_equal(a.points, b.points)):
        values = eval_kernel(spec, pdist(a.points)) if a.n > 1 else np.empty(0)
        m = squareform(values)
        diag = eval_kernel(spec, 0.0)
        if diag != 0.0:
            np.fill_diagonal(m, diag)
        return KernelMatrix(m, symmetric=True)
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: R^{a.dim} vs R^{b.dim}")
    return KernelMatrix(eval_kernel(spec, cdist(a.points, b.points)), symmetric=False)


def condition_number(m: KernelMatrix) -> float:
    """sigma_max / sigma_min from a full SVD; +inf when sigma_min underflows to 0."""
    e = m.entries
    if e.ndim != 2 or e.shape[0] != e.shape[1]:
        raise ValueError("condition number requires a square matrix")
    s = np.linalg.svd(e, compute_uv=False)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def degree_vector(m: KernelMatrix) -> np.ndarray:
    """Row sums d_i of a square kernel matrix."""
    e = m.entries
    if e.shape[0] != e.shape[1]:
        raise ValueError("degree vector requires a square matrix")
    d = e.sum(axis=1)
    if np.any(d <= 0):
        i = int(np.argmin(d))
        raise ValueError(f"isolated node: row {i} has nonpositive degree {d[i]}")
    return d


def sparsify(m: KernelMatrix, threshold: float | None = None, knn: int | None = None) -> KernelMatrix:
    """Sparsify a symmetric kernel matrix.

    threshold mode zeroes every entry below the cutoff. knn mode keeps, per
    row, the knn largest off-diagonal entries (ties broken toward the lower
    column index) plus the diagonal, then symmetrizes with an elementwise max.
    """
    if (threshold is None) == (knn is None):
        raise ValueError("specify exactly one of threshold, knn")
    e = m.entries
    n = e.shape[0]
    if e.shape[0] != e.shape[1] or not m.symmetric:
        raise ValueError("sparsify requires a symmetric square kernel matrix")
    if threshold is not None:
        out = e.copy()
        out[out < threshold] = 0.0
        return KernelMatrix(out, symmetric=True)
    k = int(knn)
    if k >= n:
        raise ValueError(f"knn must be < n = {n}")
    if k < 1:
        raise ValueError("knn must be >= 1")
    kept = np.zeros_like(e)
    cols = np.arange(n)
    for i in range(n):
        row = e[i].copy()
        row[i] = -np.inf  # the diagonal is restored separately
        order = np.lexsort((cols, -row))[:k]
        kept[i, order] = e[i, order]
    out = np.maximum(kept, kept.T)
    np.fill_diagonal(out, np.diag(e))
    return KernelMatrix(out, symmetric=True)
