"""Leave-one-out harness, parameter sweeps, and convergence-rate estimation."""

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import PointCloud, local_fill_distance, random_unitary_embed, sample_sphere
from .embedding import laplacian_eigenmaps
from .inverse import (
    TAIL_LINEAR,
    TAIL_NONE,
    InterpolationError,
    NeighborhoodPolicy,
    eval_rbf,
    fit_local_rbf,
    fit_rbf,
    shepard_eval,
)
from .kernels import condition_number, cubic, gaussian, kernel_matrix

METHOD_CUBIC = "cubic"
METHOD_GAUSSIAN = "gaussian"
METHOD_SHEPARD = "shepard"

LOO_CSV_COLUMNS = ["n", "seed", "h_local", "method", "scale_multiple", "e_avg", "failures"]
COND_CSV_COLUMNS = ["parameter", "n", "h_local", "method", "cond"]


@dataclass(frozen=True, eq=False)
class LooReport:
    """Per-point and average leave-one-out reconstruction errors.

    per_point_errors has one slot per point; folds whose fit failed hold NaN
    and their indices are listed in failures. e_avg averages the successful
    folds only; valid is False when more than 1% of folds failed.
    """

    per_point_errors: np.ndarray
    e_avg: float
    h_local: float
    method: str
    scale_multiple: float | None
    n: int
    seed: int | None
    failures: tuple
    valid: bool


@dataclass(frozen=True)
class SweepRow:
    parameter: float
    n: int
    seed: int | None
    h_local: float
    method: str
    scale_multiple: float | None
    e_avg: float
    failures: int


@dataclass(frozen=True)
class CondRow:
    parameter: float | None  # swept value; None for the scale-free flat reference
    n: int
    h_local: float
    method: str
    cond: float


@dataclass(frozen=True, eq=False)
class SweepResult:
    rows: list
    fitted_slope: float | None = None
    slope_residual: float | None = None


@dataclass(frozen=True)
class SphereConfig:
    """Synthetic-sphere pipeline: sample S^sphere_dim, rotate into R^ambient_dim,
    embed with Laplacian eigenmaps, then reconstruct by leave-one-out.

    The default affinity kernel is deliberately broad (0.25/h_local): it keeps
    the top nontrivial eigenvectors close to the sphere's linear harmonics, so
    the inverse map is smooth and near-affine. Tighter kernels distort the
    coordinates and every reconstruction method degrades sharply.
    """

    sphere_dim: int = 4
    ambient_dim: int = 10
    embed_dim: int = 5
    affinity_multiple: float = 0.25  # affinity scale = multiple / h_local of the ambient cloud
    gaussian_multiples: tuple = (0.25, 0.5, 1.0, 2.0)
    shepard_multiples: tuple = (0.25, 0.5, 1.0, 2.0)
    include_cubic: bool = True
    cubic_tail: str = TAIL_LINEAR
    max_neighbors: int = 200


@dataclass(frozen=True)
class ConditioningConfig:
    """Node sets for conditioning sweeps: the first quadrant of the unit sphere
    in R^ambient_dim, matching the kernel-matrix diagnostics protocol."""

    ambient_dim: int = 5
    quadrant_only: bool = True
    seed: int = 0
    epsilon: float = 1e-2  # fixed gaussian scale for the vs_fill sweep
    n_values: tuple = (10, 20, 50, 100, 200, 500, 1000)
    n: int = 200  # fixed size for the vs_epsilon sweep
    epsilon_values: tuple = field(default_factory=lambda: tuple(np.logspace(-2.0, 1.0, 13)))


def loo_error(
    values: PointCloud,
    coords: PointCloud,
    method: str,
    scale_multiple: float | None = None,
    tail: str = TAIL_LINEAR,
    policy: NeighborhoodPolicy | None = None,
    seed: int | None = None,
) -> LooReport:
    """Reconstruct each point from the remaining n-1 and report the mean l2 residual.

    Fits honor the neighbor policy: folds larger than max_neighbors use the
    nearest-neighbor local fit. The gaussian and shepard scales are given as a
    multiple of 1/h_local of the coordinate nodes; the cubic uses `tail`
    (linear by default) and the gaussian always solves the plain system.
    """
    policy = policy if policy is not None else NeighborhoodPolicy()
    if values.n != coords.n:
        raise ValueError("values and coords must have the same point count")
    n, d = coords.n, coords.dim
    if n < 3:
        raise ValueError("leave-one-out needs at least 3 points")
    if method == METHOD_CUBIC and tail == TAIL_LINEAR and n < d + 3:
        raise ValueError(f"cubic with linear tail needs n >= d+3 = {d + 3}")
    h = local_fill_distance(coords)
    if method in (METHOD_GAUSSIAN, METHOD_SHEPARD):
        if scale_multiple is None or scale_multiple <= 0:
            raise ValueError(f"{method} needs a positive scale multiple of 1/h_local")
        epsilon = scale_multiple / h
    elif method == METHOD_CUBIC:
        spec = cubic()
    else:
        raise ValueError(f"unknown method {method!r}")

    errors = np.full(n, np.nan)
    failures = []
    all_idx = np.arange(n)
    for j in range(n):
        rest = all_idx != j
        train_nodes = PointCloud(coords.points[rest])
        train_values = PointCloud(values.points[rest])
        query = coords.points[j]
        try:
            if method == METHOD_SHEPARD:
                pred = shepard_eval(train_nodes, train_values, query, epsilon, policy)
            else:
                if method == METHOD_GAUSSIAN:
                    spec = gaussian(epsilon)
                    fit_tail = TAIL_NONE
                else:
                    fit_tail = tail
                if train_nodes.n > policy.max_neighbors:
                    pred = fit_local_rbf(train_nodes, train_values, spec, fit_tail, policy, query)
                else:
                    pred = eval_rbf(fit_rbf(train_nodes, train_values, spec, fit_tail), query)
            errors[j] = np.linalg.norm(values.points[j] - pred)
        except InterpolationError:
            failures.append(j)
    ok = np.isfinite(errors)
    e_avg = float(errors[ok].mean()) if np.any(ok) else float("nan")
    return LooReport(
        per_point_errors=errors,
        e_avg=e_avg,
        h_local=h,
        method=method,
        scale_multiple=scale_multiple,
        n=n,
        seed=seed,
        failures=tuple(failures),
        valid=len(failures) <= 0.01 * n,
    )


def sphere_pipeline(n: int, config: SphereConfig, seed: int):
    """Sample, rotate, and embed one synthetic dataset; returns (ambient cloud, embedding)."""
    sphere = sample_sphere(n, config.sphere_dim, seed=seed)
    ambient = random_unitary_embed(sphere, config.ambient_dim, seed=seed + 1)
    spec = gaussian(config.affinity_multiple / local_fill_distance(ambient))
    emb = laplacian_eigenmaps(ambient, spec, d=config.embed_dim)
    return ambient, emb


def method_grid(config: SphereConfig):
    """(method, scale_multiple) pairs a sweep evaluates, cubic first."""
    grid = []
    if config.include_cubic:
        grid.append((METHOD_CUBIC, None))
    grid.extend((METHOD_GAUSSIAN, m) for m in config.gaussian_multiples)
    grid.extend((METHOD_SHEPARD, m) for m in config.shepard_multiples)
    return grid


def loglog_slope(x, y):
    """Least-squares slope of log y against log x, with the RMS fit residual."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((slope * lx + intercept - ly) ** 2)))
    return float(slope), resid


def convergence_sweep(n_values, config: SphereConfig = SphereConfig(), seeds=(0,)) -> SweepResult:
    """Run the sphere pipeline over a grid of sample counts and seeds.

    Each (n, seed, method, scale) gives one row pairing the coordinate-domain
    h_local with the leave-one-out average error. The slope of log e_avg
    against log h_local is fitted on the cubic rows once at least three
    distinct n values are present.
    """
    n_values = list(n_values)
    if n_values != sorted(n_values) or len(set(n_values)) != len(n_values):
        raise ValueError("n_values must be strictly increasing")
    if n_values[0] < config.embed_dim + 3:
        raise ValueError(f"every n must be >= embed_dim+3 = {config.embed_dim + 3}")
    policy = NeighborhoodPolicy(max_neighbors=config.max_neighbors)
    rows = []
    for n in n_values:
        for seed in seeds:
            ambient, emb = sphere_pipeline(n, config, seed)
            coords = PointCloud(emb.coords)
            for method, mult in method_grid(config):
                # h_local is the coordinate-domain spacing: interpolation
                # happens there, and it is what the scale multiples divide
                rep = loo_error(ambient, coords, method, mult, tail=config.cubic_tail, policy=policy, seed=seed)
                rows.append(
                    SweepRow(
                        parameter=float(n),
                        n=n,
                        seed=seed,
                        h_local=rep.h_local,
                        method=method,
                        scale_multiple=mult,
                        e_avg=rep.e_avg,
                        failures=len(rep.failures),
                    )
                )
    slope = resid = None
    cubic_rows = [r for r in rows if r.method == METHOD_CUBIC and np.isfinite(r.e_avg)]
    if len({r.n for r in cubic_rows}) >= 3:
        slope, resid = loglog_slope([r.h_local for r in cubic_rows], [r.e_avg for r in cubic_rows])
    return SweepResult(rows=rows, fitted_slope=slope, slope_residual=resid)


def conditioning_sweep(mode: str, config: ConditioningConfig = ConditioningConfig()) -> SweepResult:
    """Condition numbers of the interpolation matrix on quadrant-sphere nodes.

    vs_fill sweeps the sample count at a fixed gaussian scale, recording
    cond(K) against h_local for the gaussian and the cubic. vs_epsilon fixes
    one node set and sweeps the gaussian scale; the cubic is scale-free, so it
    contributes a single flat reference row.
    """
    if config.ambient_dim < 2:
        raise ValueError("ambient_dim must be >= 2")
    sphere_dim = config.ambient_dim - 1
    rows = []
    if mode == "vs_fill":
        for n in sorted(config.n_values):
            cloud = sample_sphere(n, sphere_dim, config.quadrant_only, config.seed)
            h = local_fill_distance(cloud)
            for name, spec in ((METHOD_GAUSSIAN, gaussian(config.epsilon)), (METHOD_CUBIC, cubic())):
                rows.append(
                    CondRow(
                        parameter=float(n),
                        n=n,
                        h_local=h,
                        method=name,
                        cond=condition_number(kernel_matrix(spec, cloud)),
                    )
                )
    elif mode == "vs_epsilon":
        cloud = sample_sphere(config.n, sphere_dim, config.quadrant_only, config.seed)
        h = local_fill_distance(cloud)
        for eps in sorted(config.epsilon_values):
            rows.append(
                CondRow(
                    parameter=float(eps),
                    n=config.n,
                    h_local=h,
                    method=METHOD_GAUSSIAN,
                    cond=condition_number(kernel_matrix(gaussian(eps), cloud)),
                )
            )
        rows.append(
            CondRow(
                parameter=None,
                n=config.n,
                h_local=h,
                method=METHOD_CUBIC,
                cond=condition_number(kernel_matrix(cubic(), cloud)),
            )
        )
    else:
        raise ValueError(f"unknown mode {mode!r}; expected vs_fill or vs_epsilon")
    return SweepResult(rows=rows)


@dataclass(frozen=True)
class TableRow:
    method: str
    scale_multiple: float | None
    e_avg: float
    failures: int
    is_min: bool


def scale_table(
    values: PointCloud,
    coords: PointCloud,
    gaussian_multiples=(0.5, 1.0, 2.0),
    shepard_multiples=(0.5, 1.0, 2.0),
    include_cubic: bool = True,
    tail: str = TAIL_LINEAR,
    policy: NeighborhoodPolicy | None = None,
    seed: int | None = None,
) -> list:
    """Leave-one-out error for every method/scale combination on one dataset,
    with the lowest entry marked."""
    cfg = SphereConfig(
        gaussian_multiples=tuple(gaussian_multiples),
        shepard_multiples=tuple(shepard_multiples),
        include_cubic=include_cubic,
        cubic_tail=tail,
    )
    entries = []
    for method, mult in method_grid(cfg):
        rep = loo_error(values, coords, method, mult, tail=tail, policy=policy, seed=seed)
        entries.append((method, mult, rep.e_avg, len(rep.failures)))
    finite = [e for _, _, e, _ in entries if np.isfinite(e)]
    best = min(finite) if finite else float("nan")
    return [
        TableRow(method, mult, e_avg, fails, bool(np.isfinite(e_avg) and e_avg == best))
        for method, mult, e_avg, fails in entries
    ]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def sweep_to_csv(result: SweepResult, path) -> None:
    """LOO sweep rows with the fixed schema n, seed, h_local, method, scale_multiple, e_avg, failures."""
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(LOO_CSV_COLUMNS)
        for r in result.rows:
            writer.writerow(
                [r.n, _cell(r.seed), _cell(r.h_local), r.method, _cell(r.scale_multiple), _cell(r.e_avg), r.failures]
            )


def sweep_to_json(result: SweepResult, path) -> None:
    """Sweep rows plus the fitted slope as one JSON document."""
    doc = {
        "rows": [asdict(r) for r in result.rows],
        "fitted_slope": result.fitted_slope,
        "slope_residual": result.slope_residual,
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def conditioning_to_csv(result: SweepResult, path) -> None:
    """Conditioning rows with the fixed schema parameter, n, h_local, method, cond."""
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(COND_CSV_COLUMNS)
        for r in result.rows:
            writer.writerow([_cell(r.parameter), r.n, _cell(r.h_local), r.method, _cell(r.cond)])


def table_to_csv(rows, path, dataset: str | None = None) -> None:
    """Scale-table rows; the is_min column marks the lowest error per dataset."""
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["dataset", "method", "scale_multiple", "e_avg", "failures", "is_min"])
        for r in rows:
            writer.writerow(
                [dataset or "", r.method, _cell(r.scale_multiple), _cell(r.e_avg), r.failures, int(r.is_min)]
            )


def median_rows(rows):
    """Median e_avg over seeds per (n, method, scale_multiple), sorted by n."""
    groups = {}
    for r in rows:
        groups.setdefault((r.n, r.method, r.scale_multiple), []).append(r.e_avg)
    out = []
    for (n, method, mult), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or 0.0)):
        finite = [v for v in vals if np.isfinite(v)]
        med = float(np.median(finite)) if finite else float("nan")
        out.append({"n": n, "method": method, "scale_multiple": mult, "median_e_avg": med, "seeds": len(vals)})
    return out
