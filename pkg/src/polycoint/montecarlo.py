"""Replicated consistency experiments for the Weighted Covariance Estimator.

Replication ``r`` at sample size ``n`` draws its path from the generator keyed
by ``(seed, n, r)``, so adding sample sizes or replications never changes the
draws of existing ones, and results do not depend on how work is scheduled.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._validation import bandwidth_from_rule, positive_int
from .coint import (
    CointModelSpec,
    SingularSystemError,
    build_regressors,
    check_bandwidth,
    estimate_beta,
    estimate_memory_wce,
    ols_beta,
)
from .longmem import DEFAULT_TRUNCATION, BivariateProcessSpec, simulate
from .spectral import get_kernel

__all__ = ["ExperimentConfig", "ExperimentResult", "run_replication", "run_experiment", "write_results", "median_errors", "parse_model"]

log = logging.getLogger(__name__)

MAX_EXCLUDED_FRACTION = 0.05

_MODEL_KEYS = {"d_x", "d_eps", "rho", "beta", "xi", "ma_truncation", "innovation_variance"}
_TOP_KEYS = {
    "model",
    "n_grid",
    "bandwidth_exponent",
    "kernel",
    "replications",
    "seed",
    "output",
    "sigma2",
    "memory_bandwidth_exponent",
}


def _order_map(values, name: str) -> dict[int, float]:
    if isinstance(values, dict):
        out = {int(k): float(v) for k, v in values.items()}
    elif isinstance(values, (list, tuple)):
        out = {a + 1: float(v) for a, v in enumerate(values)}
    else:
        raise ValueError(f"{name} must be a list of coefficients or an order->coefficient mapping")
    if any(k < 1 for k in out):
        raise ValueError(f"{name} orders must be positive")
    return out


def parse_model(model: dict) -> CointModelSpec:
    """Model section of a config: ``d_x``, ``d_eps``, ``beta`` and optional
    ``rho``, ``xi``, ``ma_truncation``, ``innovation_variance``."""
    if not isinstance(model, dict):
        raise ValueError("model must be a JSON object")
    unknown = set(model) - _MODEL_KEYS
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    for key in ("d_x", "d_eps", "beta"):
        if key not in model:
            raise ValueError(f"model.{key} is required")
    proc = BivariateProcessSpec(
        model["d_x"],
        model["d_eps"],
        model.get("rho", 0.0),
        int(model.get("ma_truncation", DEFAULT_TRUNCATION)),
        float(model.get("innovation_variance", 1.0)),
    )
    return CointModelSpec.from_coefficients(
        proc, _order_map(model["beta"], "beta"), _order_map(model.get("xi", [1.0]), "xi")
    )


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated Monte Carlo configuration.

    ``sigma2`` is ``"exact"`` (variance of the simulated ``x``), ``"sample"``
    (per-path sample variance) or a positive number.
    """

    d_x: float
    d_eps: float
    rho: float
    beta: dict
    xi: dict = field(default_factory=lambda: {1: 1.0})
    ma_truncation: int = DEFAULT_TRUNCATION
    innovation_variance: float = 1.0
    n_grid: tuple = (2**12, 2**14, 2**16)
    bandwidth_exponent: float = 0.3
    kernel: str = "bartlett"
    replications: int = 200
    seed: int = 0
    output: str | None = None
    sigma2: object = "exact"
    memory_bandwidth_exponent: float = 0.4

    def __post_init__(self):
        object.__setattr__(self, "beta", _order_map(self.beta, "beta"))
        object.__setattr__(self, "xi", _order_map(self.xi, "xi"))
        object.__setattr__(self, "n_grid", tuple(positive_int(n, "n_grid entry") for n in self.n_grid))
        if not self.n_grid:
            raise ValueError("n_grid must not be empty")
        if len(set(self.n_grid)) != len(self.n_grid):
            raise ValueError("n_grid entries must be distinct")
        positive_int(self.replications, "replications")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        for name in ("bandwidth_exponent", "memory_bandwidth_exponent"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        get_kernel(self.kernel)
        if isinstance(self.sigma2, str):
            if self.sigma2 not in ("exact", "sample"):
                raise ValueError("sigma2 must be 'exact', 'sample' or a positive number")
        elif not float(self.sigma2) > 0:
            raise ValueError("sigma2 must be positive")
        # process ranges and the identification condition are checked here
        model = self.model()
        for n in self.n_grid:
            M = self.bandwidth(n)
            chk = check_bandwidth(M, n, model.K, model.k0_tilde)
            if not chk.ok:
                raise ValueError(f"bandwidth rule violates Assumption C at n={n}: {chk.message}")
            Mm = bandwidth_from_rule(n, self.memory_bandwidth_exponent)
            if not 2 <= Mm < n:
                raise ValueError(f"memory bandwidth {Mm} is unusable at n={n}")

    @classmethod
    def from_dict(cls, data: dict, **overrides) -> "ExperimentConfig":
        data = dict(data)
        unknown = set(data) - _TOP_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        model = data.pop("model", {})
        parse_model(model)
        model = dict(model)
        kwargs = {**model, **data}
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        if "n_grid" in kwargs:
            kwargs["n_grid"] = tuple(kwargs["n_grid"])
        return cls(**kwargs)

    def process(self) -> BivariateProcessSpec:
        return BivariateProcessSpec(
            self.d_x, self.d_eps, self.rho, int(self.ma_truncation), float(self.innovation_variance)
        )

    def model(self) -> CointModelSpec:
        return CointModelSpec.from_coefficients(self.process(), self.beta, self.xi)

    def bandwidth(self, n: int) -> int:
        return bandwidth_from_rule(n, self.bandwidth_exponent)

    def to_dict(self) -> dict:
        """Nested form accepted by :meth:`from_dict`."""
        flat = asdict(self)
        flat["beta"] = {str(k): v for k, v in self.beta.items()}
        flat["xi"] = {str(k): v for k, v in self.xi.items()}
        flat["n_grid"] = list(self.n_grid)
        model = {k: flat.pop(k) for k in sorted(_MODEL_KEYS)}
        return {"model": model, **flat}


def _sigma2(cfg: ExperimentConfig, model: CointModelSpec, x: np.ndarray) -> float:
    if cfg.sigma2 == "exact":
        return model.process.var_x
    if cfg.sigma2 == "sample":
        return float(np.var(x))
    return float(cfg.sigma2)


def run_replication(cfg: ExperimentConfig, n: int, r: int) -> dict:
    """One simulate-and-estimate draw; raises :class:`SingularSystemError` on a singular system."""
    model = cfg.model()
    path = simulate(model.process, n, (cfg.seed, n, r))
    e, y = model.response(path.x, path.eps)
    K = model.K
    s2 = _sigma2(cfg, model, path.x)
    M = cfg.bandwidth(n)
    est = estimate_beta(y, path.x, K, s2, cfg.kernel, M, rate_exponents=model.rate_exponents())
    ols = ols_beta(y, path.x, K, s2)
    Mm = bandwidth_from_rule(n, cfg.memory_bandwidth_exponent)
    resid = y - est.beta_hat @ build_regressors(path.x, K, s2)
    return {
        "n": n,
        "r": r,
        "M": M,
        "beta_hat": est.beta_hat.tolist(),
        "ols": ols.tolist(),
        "scaled": est.scaled_error(model.beta).tolist(),
        "condition_number": est.condition_number,
        "d_y": estimate_memory_wce(y, cfg.kernel, Mm),
        "d_x": estimate_memory_wce(path.x, cfg.kernel, Mm),
        "d_resid": estimate_memory_wce(resid, cfg.kernel, Mm),
    }


def _task(args):
    cfg, n, r = args
    try:
        return run_replication(cfg, n, r)
    except SingularSystemError as exc:
        return {"n": n, "r": r, "error": str(exc)}


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    excluded: list
    summary: dict


def _stats(errors: np.ndarray) -> dict:
    return {
        "median_abs_error": float(np.median(errors)),
        "mean_abs_error": float(np.mean(errors)),
        "rmse": float(np.sqrt(np.mean(errors**2))),
    }


def _strictly_decreasing(v) -> bool:
    return all(b < a for a, b in zip(v, v[1:]))


def _strictly_increasing(v) -> bool:
    return len(v) > 1 and all(b > a for a, b in zip(v, v[1:]))


def summarize(cfg: ExperimentConfig, records: list, excluded: list) -> dict:
    model = cfg.model()
    beta = model.beta
    K = model.K
    per_n = []
    for n in cfg.n_grid:
        rows = [rec for rec in records if rec["n"] == n]
        entry = {
            "n": n,
            "M": cfg.bandwidth(n),
            "replications": cfg.replications,
            "used": len(rows),
            "excluded": sum(1 for rec in excluded if rec["n"] == n),
        }
        if rows:
            wce = np.abs(np.array([rec["beta_hat"] for rec in rows]) - beta)
            ols = np.abs(np.array([rec["ols"] for rec in rows]) - beta)
            scaled = np.array([rec["scaled"] for rec in rows])
            coefs = []
            for a in range(K):
                item = {"coef": a + 1, "beta": float(beta[a])}
                item.update(_stats(wce[:, a]))
                item["median_scaled_error"] = float(np.median(scaled[:, a]))
                item.update({"ols_" + k: v for k, v in _stats(ols[:, a]).items()})
                coefs.append(item)
            entry["coefficients"] = coefs
            entry["median_condition_number"] = float(np.median([rec["condition_number"] for rec in rows]))
            for key in ("d_y", "d_x", "d_resid"):
                entry["median_" + key] = float(np.median([rec[key] for rec in rows]))
        per_n.append(entry)

    flags = []
    complete = all("coefficients" in e for e in per_n)
    for a in range(K):
        if not complete:
            break
        med = [e["coefficients"][a]["median_abs_error"] for e in per_n]
        sc = [e["coefficients"][a]["median_scaled_error"] for e in per_n]
        last = per_n[-1]["coefficients"][a]
        flags.append(
            {
                "coef": a + 1,
                "median_error_decreasing": _strictly_decreasing(med),
                "scaled_error_monotone_increase": _strictly_increasing(sc),
                "wce_below_ols_at_largest_n": last["median_abs_error"] < last["ols_median_abs_error"],
            }
        )
    total = cfg.replications * len(cfg.n_grid)
    return {
        "config": cfg.to_dict(),
        "rate_exponents": model.rate_exponents().tolist(),
        "per_n": per_n,
        "flags": flags,
        "excluded_total": len(excluded),
        "excluded_fraction": len(excluded) / total,
    }


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run every ``(n, r)`` replication, ``r = 1..R``, using up to ``jobs`` processes.

    Replications whose ``f_HH(0)`` is singular are excluded and counted; the run
    fails with ``RuntimeError`` when more than 5% are excluded.
    """
    jobs = positive_int(jobs, "jobs")
    tasks = [(cfg, n, r) for n in cfg.n_grid for r in range(1, cfg.replications + 1)]
    if jobs == 1:
        out = [_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_task, tasks, chunksize=chunk))
    out.sort(key=lambda rec: (cfg.n_grid.index(rec["n"]), rec["r"]))
    records = [rec for rec in out if "error" not in rec]
    excluded = [rec for rec in out if "error" in rec]
    for rec in excluded:
        log.warning("replication n=%d r=%d excluded: %s", rec["n"], rec["r"], rec["error"])
    summary = summarize(cfg, records, excluded)
    if summary["excluded_fraction"] > MAX_EXCLUDED_FRACTION:
        raise RuntimeError(
            f"{len(excluded)} of {len(tasks)} replications excluded as singular (above the 5% limit)"
        )
    return ExperimentResult(cfg, records, excluded, summary)


REPLICATION_COLUMNS = [
    "n",
    "r",
    "M",
    "coef",
    "beta",
    "wce",
    "ols",
    "abs_error_wce",
    "abs_error_ols",
    "scaled_error",
    "condition_number",
    "d_y",
    "d_x",
    "d_resid",
]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_results(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write ``replications.csv`` (one row per replication and coefficient),
    ``curves.csv`` (long-format per-n statistics) and ``summary.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    beta = result.config.model().beta
    paths = {
        "replications": out_dir / "replications.csv",
        "curves": out_dir / "curves.csv",
        "summary": out_dir / "summary.json",
    }
    with open(paths["replications"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPLICATION_COLUMNS)
        for rec in result.records:
            for a, b in enumerate(beta):
                wce, ols = rec["beta_hat"][a], rec["ols"][a]
                row = [rec["n"], rec["r"], rec["M"], a + 1, b, wce, ols, abs(wce - b), abs(ols - b)]
                row += [rec["scaled"][a], rec["condition_number"], rec["d_y"], rec["d_x"], rec["d_resid"]]
                w.writerow([_fmt(v) for v in row])
    with open(paths["curves"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "M", "coef", "statistic", "value"])
        for entry in result.summary["per_n"]:
            for item in entry.get("coefficients", []):
                for key, val in item.items():
                    if key in ("coef", "beta"):
                        continue
                    w.writerow([entry["n"], entry["M"], item["coef"], key, _fmt(val)])
    with open(paths["summary"], "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return paths


def median_errors(result: ExperimentResult, statistic: str = "median_abs_error") -> np.ndarray:
    """``(len(n_grid), K)`` array of one per-n statistic."""
    return np.array([[c[statistic] for c in e["coefficients"]] for e in result.summary["per_n"]])
