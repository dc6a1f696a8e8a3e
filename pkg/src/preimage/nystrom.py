"""Nystrom extension of normalized-kernel eigenvectors, its rescaled-RBF
reformulation, and discontinuity diagnostics under kernel sparsification."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import PointCloud
from .embedding import Embedding
from .inverse import TAIL_NONE, eval_rbf, fit_rbf
from .kernels import KernelSpec, eval_kernel

NYSTROM_DIRECT = "nystrom_direct"
RBF_FORM = "rbf_form"


class ZeroDegreeError(ValueError):
    """The query point has no kernel mass on the training set."""


@dataclass(frozen=True)
class ExtensionResult:
    value: float
    degree_at_query: float
    path: str


@dataclass(frozen=True, eq=False)
class ScanProfile:
    """Extension values along a segment, with and without query-side sparsification."""

    ts: np.ndarray
    values_full: np.ndarray
    values_sparse: np.ndarray
    delta_max_full: float
    delta_max_sparse: float
    failures: tuple
    diagnostic_only: bool = False


def _resolve(emb: Embedding, cloud, spec):
    cloud = cloud if cloud is not None else emb.source
    spec = spec if spec is not None else emb.spec
    if cloud is None or spec is None:
        raise ValueError("embedding carries no source/spec; pass cloud and spec explicitly")
    return cloud, spec


def _query_kernel_vector(cloud: PointCloud, spec: KernelSpec, query) -> np.ndarray:
    q = np.asarray(query, dtype=float)
    if q.ndim != 1 or q.shape[0] != cloud.dim:
        raise ValueError(f"query must be a single point in R^{cloud.dim}")
    return eval_kernel(spec, np.linalg.norm(cloud.points - q[None, :], axis=1))


def _extend_with_kvec(emb: Embedding, kvec: np.ndarray, l: int) -> ExtensionResult:
    lam = float(emb.eigvals[l])
    if lam == 0.0:
        raise ValueError(f"eigenvalue {l} is zero; extension undefined")
    dq = float(kvec.sum())
    if dq <= 0.0:
        raise ZeroDegreeError("zero degree at query")
    ktilde = kvec / np.sqrt(dq * emb.degrees)
    return ExtensionResult(float(ktilde @ emb.eigvecs[:, l]) / lam, dq, NYSTROM_DIRECT)


def nystrom_extend(emb: Embedding, cloud: PointCloud | None, spec: KernelSpec | None, query, l: int) -> ExtensionResult:
    """Extend eigenvector l to an arbitrary query by the normalized-kernel sum
    (1/lambda_l) sum_j k(query, x_j) / sqrt(d(query) d_j) * phi_l(x_j)."""
    cloud, spec = _resolve(emb, cloud, spec)
    kvec = _query_kernel_vector(cloud, spec, query)
    return _extend_with_kvec(emb, kvec, l)


def nystrom_via_rbf(emb: Embedding, cloud: PointCloud | None, spec: KernelSpec | None, query, l: int) -> ExtensionResult:
    """Same extension through the plain-kernel interpolation route: fit the
    kernel system to sqrt(D) phi_l, evaluate, and rescale by 1/sqrt(d(query)).

    Agrees with nystrom_extend whenever the kernel matrix is nonsingular.
    """
    cloud, spec = _resolve(emb, cloud, spec)
    lam = float(emb.eigvals[l])
    if lam == 0.0:
        raise ValueError(f"eigenvalue {l} is zero; extension undefined")
    kvec = _query_kernel_vector(cloud, spec, query)
    dq = float(kvec.sum())
    if dq <= 0.0:
        raise ZeroDegreeError("zero degree at query")
    rescaled = np.sqrt(emb.degrees) * emb.eigvecs[:, l]
    model = fit_rbf(cloud, PointCloud(rescaled[:, None]), spec, tail=TAIL_NONE)
    value = float(eval_rbf(model, np.asarray(query, dtype=float))[0]) / np.sqrt(dq)
    return ExtensionResult(value, dq, RBF_FORM)


def _truncate_kvec(kvec: np.ndarray, threshold: float | None, knn: int | None) -> np.ndarray:
    if threshold is not None:
        out = kvec.copy()
        out[out < threshold] = 0.0
        return out
    k = int(knn)
    if not 1 <= k <= kvec.size:
        raise ValueError(f"knn must be in [1, {kvec.size}]")
    order = np.lexsort((np.arange(kvec.size), -kvec))[:k]
    out = np.zeros_like(kvec)
    out[order] = kvec[order]
    return out


def _delta_max(values: np.ndarray) -> float:
    """Largest jump between consecutive finite profile values."""
    a, b = values[:-1], values[1:]
    ok = np.isfinite(a) & np.isfinite(b)
    if not np.any(ok):
        return float("nan")
    return float(np.abs(b[ok] - a[ok]).max())


def discontinuity_scan(
    emb: Embedding,
    cloud: PointCloud | None,
    spec: KernelSpec | None,
    segment,
    steps: int,
    threshold: float | None = None,
    knn: int | None = None,
    l: int = 1,
) -> ScanProfile:
    """Profile the extension of eigenvector l along a segment, comparing the
    untouched query-side kernel vector with a sparsified one.

    Thresholding zeroes query-kernel entries below the cutoff (the same rule a
    thresholded training matrix applies), which makes both k(query, .) and the
    query degree discontinuous in the query. knn truncation keeps the knn
    largest entries; that extension is poorly defined for new points, so the
    profile is flagged diagnostic_only. Zero-degree queries are recorded as
    per-point failures and the scan continues.
    """
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if (threshold is None) == (knn is None):
        raise ValueError("specify exactly one of threshold, knn")
    cloud, spec = _resolve(emb, cloud, spec)
    a, b = (np.asarray(p, dtype=float) for p in segment)
    ts = np.linspace(0.0, 1.0, steps)
    queries = a[None, :] + ts[:, None] * (b - a)[None, :]
    kall = eval_kernel(spec, cdist(queries, cloud.points))
    full = np.full(steps, np.nan)
    sparse = np.full(steps, np.nan)
    failures = []
    for i in range(steps):
        try:
            full[i] = _extend_with_kvec(emb, kall[i], l).value
        except ZeroDegreeError as e:
            failures.append((i, "full", str(e)))
        try:
            sparse[i] = _extend_with_kvec(emb, _truncate_kvec(kall[i], threshold, knn), l).value
        except ZeroDegreeError as e:
            failures.append((i, "sparse", str(e)))
    return ScanProfile(
        ts=ts,
        values_full=full,
        values_sparse=sparse,
        delta_max_full=_delta_max(full),
        delta_max_sparse=_delta_max(sparse),
        failures=tuple(failures),
        diagnostic_only=knn is not None,
    )


def scan_to_csv(profile: ScanProfile, path) -> None:
    """Emit a scan as CSV with columns step, t, value_full, value_sparse."""
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "t", "value_full", "value_sparse"])
        for i, t in enumerate(profile.ts):
            writer.writerow([i, f"{t:.17g}", f"{profile.values_full[i]:.17g}", f"{profile.values_sparse[i]:.17g}"])
