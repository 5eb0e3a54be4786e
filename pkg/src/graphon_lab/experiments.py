"""Experiment orchestration: seeded sweeps, grid fitting, result files.

Runs the standard studies at configurable scale: error-versus-size sweeps
(with ``m = n/2``), an error-versus-intensity sweep, and the
smooth-graphon study with theory-driven cluster counts.  Every cell of an
experiment carries a seed sufficient to replay it in isolation, so full
reruns are deterministic.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .aggregation import HyperGrid, default_grid, ewa_weights, temperature
from .core import (
    BlockModel,
    Graphon,
    NoiseModel,
    block_inner,
    induced_sq_norm,
    induced_mean,
)
from .estimation import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL_GAMMA,
    FitConfig,
    FitReport,
    _degree_trim,
    kmeans,
    lloyd_fit,
)
from .evaluation import (
    delta_tilde,
    mse_theta,
    oracle_fit,
    oracle_risk_bernoulli,
    psi_condition,
    rate_bound,
)
from .io import dump_json
from .svg import line_plot
from .synthesis import (
    SynthConfig,
    make_standard_graphon,
    synthesize,
    true_assignments,
)

__all__ = [
    "ExperimentSpec",
    "ExperimentResult",
    "run_experiment",
    "hoelder_KL_rule",
    "emit_outputs",
    "load_records_csv",
    "fit_grid",
    "run_ewa_experiment",
    "worker_count",
]

log = logging.getLogger(__name__)

_SETUPS = ("rand_graphon", "cos_graphon", "hoelder")

RECORD_FIELDS = (
    "sweep_value",
    "init",
    "rep",
    "seed",
    "mse",
    "delta_tilde",
    "oracle_mse",
    "rate_bound",
    "psi",
    "psi_ok",
    "runtime_ms",
)


def worker_count() -> int:
    """Worker pool size, bounded by the GRAPHON_LAB_THREADS variable."""
    raw = os.environ.get("GRAPHON_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cell_seed(root_seed: int, *key: int) -> int:
    """A 63-bit seed derived deterministically from a root seed and a key."""
    state = np.random.SeedSequence(
        entropy=int(root_seed), spawn_key=tuple(int(k) for k in key)
    ).generate_state(1, dtype=np.uint64)[0]
    return int(state >> np.uint64(1))


def hoelder_KL_rule(
    n: int, m: int, rho: float, noise: NoiseModel, hoelder_L: float, alpha: float = 1.0
) -> Tuple[int, int]:
    """Theory-driven cluster counts for smooth graphons.

    ``K = L = floor((3 n m L^2 / (25 s^2 + 4 b rho))^(1 / (2 (alpha + 1))))``,
    clamped to ``[2, min(n, m) / 2]``.
    """
    sigma2, b = noise.bernstein_params(rho)
    raw = (3.0 * n * m * hoelder_L**2 / (25.0 * sigma2 + 4.0 * b * rho)) ** (
        1.0 / (2.0 * (alpha + 1.0))
    )
    hi = max(2, min(n, m) // 2)
    K = int(min(max(int(np.floor(raw)), 2), hi))
    return K, K


@dataclass(frozen=True)
class ExperimentSpec:
    """A declarative description of one experiment.

    Exactly one of ``n_values`` (sizes, with ``m = n/2``) or
    ``rho_values`` (intensities, at fixed ``n, m``) must be given.  For
    the piecewise-constant set-ups ``K`` and ``L`` give both the true and
    the fitted cluster counts; for ``hoelder`` they may be omitted and
    the theory-driven rule picks them per size.
    """

    name: str
    setup: str
    noise: NoiseModel = field(default_factory=NoiseModel.bernoulli)
    rho: float = 0.5
    n_values: Optional[Tuple[int, ...]] = None
    rho_values: Optional[Tuple[float, ...]] = None
    n: Optional[int] = None
    m: Optional[int] = None
    K: Optional[int] = None
    L: Optional[int] = None
    n0: int = 0
    m0: int = 0
    reps: int = 50
    inits: Tuple[str, ...] = ("spectral", "random")
    restarts: int = 10
    max_iters: int = DEFAULT_MAX_ITERS
    tol_gamma: float = DEFAULT_TOL_GAMMA
    seed: int = 0
    delta_grid: int = 1000

    def __post_init__(self):
        if self.setup not in _SETUPS:
            raise ValueError(f"unknown setup {self.setup!r}")
        if (self.n_values is None) == (self.rho_values is None):
            raise ValueError("give exactly one of n_values or rho_values")
        if self.rho_values is not None and (self.n is None or self.m is None):
            raise ValueError("a rho sweep needs fixed n and m")
        if self.setup != "hoelder" and (self.K is None or self.L is None):
            raise ValueError("piecewise-constant setups need K and L")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        for init in self.inits:
            if init not in ("spectral", "random"):
                raise ValueError(f"unknown init {init!r}")
        if self.n_values is not None:
            object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        if self.rho_values is not None:
            object.__setattr__(
                self, "rho_values", tuple(float(v) for v in self.rho_values)
            )
        object.__setattr__(self, "inits", tuple(self.inits))

    def sweep_cells(self) -> List[dict]:
        """One dict of primitive parameters per sweep value."""
        cells = []
        if self.n_values is not None:
            for idx, n in enumerate(self.n_values):
                cells.append(
                    {"sweep_index": idx, "sweep_value": n, "n": n, "m": n // 2,
                     "rho": self.rho}
                )
        else:
            for idx, rho in enumerate(self.rho_values):
                cells.append(
                    {"sweep_index": idx, "sweep_value": rho, "n": self.n,
                     "m": self.m, "rho": rho}
                )
        return cells

    def to_dict(self) -> dict:
        d = asdict(self)
        d["noise"] = self.noise.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "ExperimentSpec":
        d = dict(d)
        d["noise"] = NoiseModel.from_dict(d["noise"])
        for key in ("n_values", "rho_values", "inits"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        return ExperimentSpec(**d)


@dataclass
class ExperimentResult:
    name: str
    spec: dict
    records: List[dict]
    summary: List[dict]


def _build_graphon(setup: str, K: Optional[int], L: Optional[int], rho: float,
                   seed: int) -> Graphon:
    if setup == "rand_graphon":
        return make_standard_graphon("rand", K=K, L=L, rho=rho, seed=seed)
    if setup == "cos_graphon":
        return make_standard_graphon("cos", K=K, L=L, rho=rho)
    return make_standard_graphon("hoelder", rho=rho)


def _run_cell(payload: dict) -> List[dict]:
    """All records for one (sweep value, repetition) cell."""
    spec = ExperimentSpec.from_dict(payload["spec"])
    cell = payload["cell"]
    rep = payload["rep"]
    n, m, rho = cell["n"], cell["m"], cell["rho"]
    graphon_seed = cell_seed(spec.seed, 99)
    graphon = _build_graphon(spec.setup, spec.K, spec.L, rho, graphon_seed)

    if spec.setup == "hoelder" and spec.K is None:
        K, L = hoelder_KL_rule(n, m, rho, spec.noise, graphon.hoelder_L)
    else:
        K, L = spec.K, spec.L

    seed = cell_seed(spec.seed, cell["sweep_index"], rep)
    obs = synthesize(SynthConfig(n, m, graphon, spec.noise, seed=seed))

    oracle_mse = None
    if graphon.family == "piecewise_constant":
        r_true, c_true = true_assignments(graphon, *obs.latents)
        z_rows = _assignment(n, graphon.K, r_true)
        z_cols = _assignment(m, graphon.L, c_true)
        oracle = oracle_fit(obs.H, z_rows, z_cols)
        oracle_mse = mse_theta(induced_mean(oracle), obs.theta_star)

    bound = rate_bound(spec.noise, rho, n, m, K, L)
    psi = None
    psi_ok = None
    if spec.n0 >= 3 and spec.m0 >= 3:
        psi = psi_condition(n, m, spec.n0, spec.m0)
        sigma2, b = spec.noise.bernstein_params(rho)
        psi_ok = 1 if (b == 0 or psi <= sigma2 / b**2) else 0

    records = []
    for init in spec.inits:
        cfg = FitConfig(
            K=K, L=L, n0=spec.n0, m0=spec.m0, init=init,
            restarts=spec.restarts, max_iters=spec.max_iters,
            tol_gamma=spec.tol_gamma, seed=seed,
        )
        try:
            cfg.validate_for(n, m)
        except ValueError as exc:
            log.warning("skipping infeasible cell %s: %s", (cell, init), exc)
            continue
        t0 = time.perf_counter()
        report = lloyd_fit(obs.H, cfg)
        theta_hat = induced_mean(report.model)
        mse = mse_theta(theta_hat, obs.theta_star)
        dt = None
        if spec.setup == "hoelder":
            dt = delta_tilde(
                theta_hat, graphon, *obs.latents, grid_res=spec.delta_grid
            )
        runtime_ms = (time.perf_counter() - t0) * 1e3
        records.append(
            {
                "sweep_value": cell["sweep_value"],
                "init": init,
                "rep": rep,
                "seed": seed,
                "mse": mse,
                "delta_tilde": dt,
                "oracle_mse": oracle_mse,
                "rate_bound": bound,
                "psi": psi,
                "psi_ok": psi_ok,
                "runtime_ms": runtime_ms,
            }
        )
    return records


def _assignment(n: int, K: int, labels: np.ndarray):
    from .core import AssignmentMatrix

    return AssignmentMatrix(n, K, labels)


def _summarize(records: List[dict], inits: Sequence[str]) -> List[dict]:
    summary = []
    sweep_values = sorted({r["sweep_value"] for r in records})
    for sv in sweep_values:
        at_sv = [r for r in records if r["sweep_value"] == sv]
        for init in inits:
            vals = [r["mse"] for r in at_sv if r["init"] == init]
            if vals:
                summary.append(_quantile_row(sv, init, vals))
        oracle_vals = [r["oracle_mse"] for r in at_sv if r["oracle_mse"] is not None]
        if oracle_vals:
            summary.append(_quantile_row(sv, "oracle", oracle_vals))
        bounds = [r["rate_bound"] for r in at_sv]
        summary.append(_quantile_row(sv, "bound", bounds))
    return summary


def _quantile_row(sweep_value, init, vals) -> dict:
    vals = np.asarray(vals, dtype=np.float64)
    return {
        "sweep_value": sweep_value,
        "init": init,
        "median": float(np.median(vals)),
        "q10": float(np.quantile(vals, 0.1)),
        "q90": float(np.quantile(vals, 0.9)),
    }


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Execute every (sweep value, repetition, init) cell of a spec.

    Cells run on a worker pool bounded by ``GRAPHON_LAB_THREADS`` (default
    one); records are keyed and sorted afterwards, so the output does not
    depend on scheduling.
    """
    payloads = [
        {"spec": spec.to_dict(), "cell": cell, "rep": rep}
        for cell in spec.sweep_cells()
        for rep in range(spec.reps)
    ]
    workers = worker_count()
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, payloads))
    else:
        chunks = [_run_cell(p) for p in payloads]
    # map() preserves payload order, so assembly is scheduling-independent:
    # records come out keyed by (sweep position, rep, init)
    records = [rec for chunk in chunks for rec in chunk]
    summary = _summarize(records, spec.inits)
    summary.extend(_closed_form_oracle_rows(spec))
    return ExperimentResult(
        name=spec.name, spec=spec.to_dict(), records=records, summary=summary
    )


def _closed_form_oracle_rows(spec: ExperimentSpec) -> List[dict]:
    """Closed-form oracle curve overlaid on Bernoulli intensity sweeps."""
    if spec.rho_values is None or spec.noise.kind != "bernoulli":
        return []
    if spec.setup not in ("rand_graphon", "cos_graphon"):
        return []
    rows = []
    graphon_seed = cell_seed(spec.seed, 99)
    for cell in spec.sweep_cells():
        graphon = _build_graphon(
            spec.setup, spec.K, spec.L, cell["rho"], graphon_seed
        )
        closed = oracle_risk_bernoulli(graphon.values, cell["n"], cell["m"])
        rows.append(
            {
                "sweep_value": cell["sweep_value"],
                "init": "oracle_formula",
                "median": closed,
                "q10": closed,
                "q90": closed,
            }
        )
    return rows


# --------------------------------------------------------------------------
# Result persistence
# --------------------------------------------------------------------------


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def emit_outputs(
    result: ExperimentResult,
    outdir,
    formats: Sequence[str] = ("csv", "json", "svg"),
) -> Dict[str, Path]:
    """Write the per-cell records (CSV), summary (JSON) and plot (SVG)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}
    if "csv" in formats:
        path = outdir / f"{result.name}_records.csv"
        lines = [",".join(RECORD_FIELDS)]
        for rec in result.records:
            lines.append(",".join(_csv_value(rec[f]) for f in RECORD_FIELDS))
        path.write_text("\n".join(lines) + "\n")
        paths["csv"] = path
    if "json" in formats:
        path = outdir / f"{result.name}_summary.json"
        dump_json(
            path,
            {"name": result.name, "spec": result.spec, "summary": result.summary},
        )
        paths["json"] = path
    if "svg" in formats:
        path = outdir / f"{result.name}.svg"
        _plot_summary(result, path)
        paths["svg"] = path
    return paths


def _plot_summary(result: ExperimentResult, path: Path) -> None:
    inits = [i for i in dict.fromkeys(r["init"] for r in result.summary)]
    series = []
    bands = []
    for init in inits:
        rows = [r for r in result.summary if r["init"] == init]
        xs = [r["sweep_value"] for r in rows]
        series.append((init, xs, [r["median"] for r in rows]))
        if init not in ("oracle", "oracle_formula", "bound"):
            bands.append((init, xs, [r["q10"] for r in rows], [r["q90"] for r in rows]))
    logx = result.spec.get("n_values") is not None
    line_plot(
        str(path),
        series,
        bands=bands,
        title=result.name,
        xlabel="n" if logx else "rho",
        ylabel="squared error",
        logx=logx,
    )


def load_records_csv(path) -> List[dict]:
    """Parse a records CSV back into dicts (inverse of :func:`emit_outputs`)."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        rec = {}
        for key, raw in zip(header, line.split(",")):
            if raw == "":
                rec[key] = None
            elif key in ("init",):
                rec[key] = raw
            elif key in ("rep", "seed", "psi_ok"):
                rec[key] = int(raw)
            elif key == "sweep_value":
                rec[key] = float(raw) if "." in raw or "e" in raw else int(raw)
            else:
                rec[key] = float(raw)
        out.append(rec)
    return out


# --------------------------------------------------------------------------
# Grid fitting for aggregation
# --------------------------------------------------------------------------


def fit_grid(
    H: np.ndarray,
    grid: HyperGrid,
    seed: int,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol_gamma: float = DEFAULT_TOL_GAMMA,
) -> Dict[Tuple[int, int, int, int], FitReport]:
    """Fit every grid entry, sharing work across entries.

    One SVD of the trimmed matrix serves all entries; k-means runs once
    per distinct K and per distinct L.  For fixed (K, L), a fit whose
    whole trajectory already respected a tighter pair of size floors is
    reused for that entry (the two runs provably coincide: an optimal
    step over the looser feasible set that lands inside the tighter set
    is optimal there too).  Entries whose floors bind get their own run,
    warm-started from the loosest fit already performed.
    """
    H = np.asarray(H, dtype=np.float64)
    n, m = H.shape
    grid.validate_for(n, m)
    by_pair: Dict[Tuple[int, int], List[Tuple[int, int, int, int]]] = {}
    for entry in grid:
        by_pair.setdefault((entry[0], entry[1]), []).append(entry)

    U, s, Vt = np.linalg.svd(_degree_trim(H), full_matrices=False)
    row_labels = {}
    col_labels = {}
    for K in sorted({p[0] for p in by_pair}):
        row_labels[K] = kmeans(U[:, :K] * s[:K], K, seed=cell_seed(seed, 8, K))
    for L in sorted({p[1] for p in by_pair}):
        col_labels[L] = kmeans(Vt[:L].T * s[:L], L, seed=cell_seed(seed, 9, L))

    out: Dict[Tuple[int, int, int, int], FitReport] = {}
    for (K, L), entries in by_pair.items():
        entries = sorted(entries, key=lambda e: (e[2], e[3]))
        base = lloyd_fit(
            H,
            FitConfig(
                K=K, L=L, n0=0, m0=0, init="given",
                init_labels=(row_labels[K], col_labels[L]),
                max_iters=max_iters, tol_gamma=tol_gamma, seed=seed,
            ),
        )
        performed: List[Tuple[int, int, FitReport]] = [(0, 0, base)]
        for entry in entries:
            n0, m0 = entry[2], entry[3]
            hit = None
            for b_n0, b_m0, rep in performed:
                if (
                    b_n0 <= n0
                    and b_m0 <= m0
                    and rep.traj_min_sizes[0] >= n0
                    and rep.traj_min_sizes[1] >= m0
                ):
                    hit = rep
                    break
            if hit is None:
                donors = [t for t in performed if t[0] <= n0 and t[1] <= m0]
                donor = max(donors, key=lambda t: (t[0], t[1]))[2]
                hit = lloyd_fit(
                    H,
                    FitConfig(
                        K=K, L=L, n0=n0, m0=m0, init="given",
                        init_labels=(
                            donor.model.z_rows.labels,
                            donor.model.z_cols.labels,
                        ),
                        max_iters=max_iters, tol_gamma=tol_gamma, seed=seed,
                    ),
                )
                performed.append((n0, m0, hit))
            out[entry] = hit
    return out


def _block_sq_residual(M_sq: float, M: np.ndarray, model: BlockModel) -> float:
    """``||M - induced||_F^2`` from block sums, without materializing."""
    return M_sq - 2.0 * block_inner(M, model) + induced_sq_norm(model)


def run_ewa_experiment(
    n: int,
    m: int,
    graphon: Graphon,
    noise: NoiseModel,
    reps: int,
    seed: int,
    beta: Optional[float] = None,
    grid: Optional[HyperGrid] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    weight_floor: float = 1e-15,
) -> dict:
    """Aggregate grid fits over independent repetitions.

    Per repetition: draw (H, H'), fit every grid entry on H, weight the
    fits by their squared residual against H', and compare the mixture's
    error with the best single fit's error.  Mixture terms with weight
    below ``weight_floor`` are skipped when accumulating the aggregate
    matrix (a sub-double-precision truncation).
    """
    grid = grid if grid is not None else default_grid(n, m)
    beta = beta if beta is not None else temperature(noise)
    records = []
    for rep in range(reps):
        rep_seed = cell_seed(seed, 3, rep)
        obs = synthesize(
            SynthConfig(n, m, graphon, noise, seed=rep_seed, with_second_copy=True)
        )
        reports = fit_grid(obs.H, grid, seed=rep_seed, max_iters=max_iters)
        hp_sq = float(np.einsum("ij,ij->", obs.H_prime, obs.H_prime))
        ts_sq = float(np.einsum("ij,ij->", obs.theta_star, obs.theta_star))
        entries = list(grid)
        stats: Dict[int, Tuple[float, float]] = {}
        residuals = np.empty(len(entries))
        mses = np.empty(len(entries))
        for i, entry in enumerate(entries):
            rep_fit = reports[entry]
            key = id(rep_fit)
            if key not in stats:
                model = rep_fit.model
                res = _block_sq_residual(hp_sq, obs.H_prime, model)
                mse = _block_sq_residual(ts_sq, obs.theta_star, model) / (n * m)
                stats[key] = (res, mse)
            residuals[i], mses[i] = stats[key]
        weights = ewa_weights(residuals, beta)
        aggregate = np.zeros((n, m))
        for w, entry in zip(weights, entries):
            if w > weight_floor:
                aggregate += w * induced_mean(reports[entry].model)
        records.append(
            {
                "rep": rep,
                "seed": rep_seed,
                "ewa_mse": mse_theta(aggregate, obs.theta_star),
                "best_fit_mse": float(mses.min()),
                "argmin_weight": float(weights[int(np.argmin(residuals))]),
            }
        )
    return {
        "beta": beta,
        "grid_size": len(grid),
        "records": records,
    }
