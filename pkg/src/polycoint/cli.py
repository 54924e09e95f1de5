"""Command-line entry point: ``polycoint <command> [options]``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
failures during computation or I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ._validation import bandwidth_from_rule, positive_int
from .coint import (
    AssumptionViolation,
    SingularSystemError,
    build_regressors,
    check_assumption_a3,
    check_bandwidth,
    estimate_beta,
    estimate_memory_wce,
    max_identifiable_order,
)
from .diagram import EnumerationTooLarge, connected_signatures, enumerate_diagrams, is_connected, signature_string
from .longmem import simulate
from .montecarlo import ExperimentConfig, parse_model, run_experiment, write_results
from .spectral import KernelValidationError, LagWindowKernel, builtin_kernels, get_kernel

log = logging.getLogger("polycoint")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValueError):
    pass


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return data


def _dump(obj, out) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _fmt(v) -> str:
    return repr(float(v))


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args) -> int:
    data = _load_config(args.config)
    unknown = set(data) - {"model", "n", "seed", "output"}
    if unknown:
        raise UsageError(f"unknown simulate config keys: {sorted(unknown)}")
    n = args.n if args.n is not None else data.get("n")
    if n is None:
        raise UsageError("sample size required: pass --n or set 'n' in the config")
    n = positive_int(n, "n")
    model = parse_model(data.get("model", {}))
    seed = args.seed if args.seed is not None else data.get("seed", 0)
    if isinstance(seed, bool) or int(seed) != seed or seed < 0:
        raise UsageError("seed must be a nonnegative integer")
    seed = int(seed)
    path = simulate(model.process, n, seed)
    e, y = model.response(path.x, path.eps)
    out = Path(args.out or data.get("output") or "simulation.csv")
    if out.suffix != ".csv":
        out = out / "simulation.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "x", "eps", "e", "y"])
        for t in range(n):
            w.writerow([str(t + 1), _fmt(path.x[t]), _fmt(path.eps[t]), _fmt(e[t]), _fmt(y[t])])
    sidecar = {
        "columns": ["t", "x", "eps", "e", "y"],
        "n": n,
        "seed": seed,
        "model": model.to_dict(),
        "rate_exponents": model.rate_exponents().tolist(),
    }
    _dump(sidecar, out.with_name(out.stem + ".meta.json"))
    log.info("wrote %s", out)
    return EXIT_OK


# -- estimate -----------------------------------------------------------------


def _read_xy(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise UsageError(f"{path} must have 'x' and 'y' columns")
        rows = [(row["x"], row["y"]) for row in reader]
    try:
        arr = np.array(rows, dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: non-numeric entry ({exc})") from exc
    if arr.size == 0:
        raise UsageError(f"{path} has no data rows")
    return arr[:, 0], arr[:, 1]


_ESTIMATE_KEYS = {"K", "kernel", "M", "bandwidth_exponent", "sigma2", "memory_bandwidth_exponent", "d_x", "d_e", "k0_tilde"}


def cmd_estimate(args) -> int:
    data = _load_config(args.config)
    unknown = set(data) - _ESTIMATE_KEYS
    if unknown:
        raise UsageError(f"unknown estimate config keys: {sorted(unknown)}")
    for key in ("K", "kernel", "M", "bandwidth_exponent", "sigma2"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    x, y = _read_xy(args.input)
    n = x.size
    K = positive_int(data.get("K", 2), "K")
    kernel = get_kernel(data.get("kernel", "bartlett"))
    if data.get("M") is not None:
        M = positive_int(data["M"], "M")
    else:
        M = bandwidth_from_rule(n, float(data.get("bandwidth_exponent", 0.3)))
    if M >= n:
        raise UsageError(f"bandwidth M={M} must be smaller than the sample size n={n} (Assumption C)")
    sigma2 = data.get("sigma2")
    sigma2 = float(np.var(x)) if sigma2 is None else float(sigma2)
    if not sigma2 > 0:
        raise UsageError("sigma2 must be positive")
    k0t = positive_int(data.get("k0_tilde", 1), "k0_tilde")

    est = estimate_beta(y, x, K, sigma2, kernel, M)
    resid = y - est.beta_hat @ build_regressors(x, K, sigma2)
    Mm = bandwidth_from_rule(n, float(data.get("memory_bandwidth_exponent", 0.4)))
    memory = {}
    if 2 <= Mm < n:
        for name, series in (("y", y), ("x", x), ("residual", resid)):
            try:
                memory[name] = estimate_memory_wce(series, kernel, Mm)
            except ValueError:
                memory[name] = None

    warnings = []
    bw = check_bandwidth(M, n, K, k0t)
    if not bw.ok:
        warnings.append(f"bandwidth growth condition (Assumption C) not met: {bw.message}")
    d_x = data.get("d_x", memory.get("x"))
    d_e = data.get("d_e", memory.get("residual"))
    identification = None
    a3 = None
    if d_x is not None and d_e is not None:
        d_x = min(max(float(d_x), 0.0), 0.499999)
        d_e = min(max(float(d_e), 0.0), 0.499999)
        kmax = max_identifiable_order(d_x, d_e)
        identification = {"d_x": d_x, "d_e": d_e, "max_identifiable_order": kmax}
        if kmax is None or K > kmax:
            warnings.append(
                f"K={K} exceeds the largest identifiable order ({kmax}): the top Hermite regressor "
                "must have stronger memory than the residual, i.e. K(2d_x-1) > 2d_e-1"
            )
        # with d_e the residual memory, k0~(2 d_eps - 1) = 2 d_e - 1
        chk = check_assumption_a3(K, d_x, 1, d_e)
        a3 = {"ok": chk.ok, "lhs": chk.lhs, "rhs": chk.rhs, "message": chk.message}
        if not chk.ok:
            warnings.append(f"identification condition (Assumption A3) fails: {chk.message}")
    for w in warnings:
        log.warning(w)
    report = {
        "n": n,
        "K": K,
        "M": M,
        "kernel": kernel.name,
        "sigma2": sigma2,
        "beta_hat": est.beta_hat.tolist(),
        "condition_number": est.condition_number,
        "f_hh": est.f_hh.tolist(),
        "f_hy": est.f_hy.tolist(),
        "checks": {
            "bandwidth": {"ok": bw.ok, "eta": bw.eta, "exponent": bw.exponent, "ratio": bw.ratio},
            "assumption_a3": a3,
            "identification": identification,
        },
        "memory_bandwidth": Mm,
        "memory": memory,
        "warnings": warnings,
    }
    _dump(report, args.out)
    return EXIT_OK


# -- montecarlo ---------------------------------------------------------------


def cmd_montecarlo(args) -> int:
    data = _load_config(args.config)
    cfg = ExperimentConfig.from_dict(data, seed=args.seed, replications=args.replications)
    out = args.out or cfg.output or "montecarlo"
    result = run_experiment(cfg, jobs=args.jobs)
    paths = write_results(result, out)
    for flag in result.summary["flags"]:
        log.info("coef %d: %s", flag["coef"], flag)
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


# -- diagrams -----------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise UsageError(f"orders must be comma-separated integers, got {text!r}") from exc


def cmd_diagrams(args) -> int:
    orders = _int_list(args.orders)
    labels = None
    if args.labels:
        labels = [t.strip() for t in args.labels.split(",")]
        if len(labels) != len(orders):
            raise UsageError("need one label per row")
    diagrams = enumerate_diagrams(orders, cap=args.cap)
    result = {"orders": orders, "total_vertices": sum(orders), "diagrams": [], "signatures": []}
    if not diagrams:
        result["note"] = "no diagrams: the total number of vertices is odd, so no perfect matching exists"
        _dump(result, args.out)
        return EXIT_OK
    for d in diagrams:
        result["diagrams"].append(
            {
                "edges": [[i + 1, j + 1, m] for (i, j), m in sorted(d.edges.items())],
                "count": d.count,
                "connected": is_connected(d),
            }
        )
    sigs = connected_signatures(orders, labels, cap=args.cap)
    for sig, count in sigs.items():
        result["signatures"].append({"signature": signature_string(sig), "count": count})
    result["n_diagrams"] = len(diagrams)
    result["n_connected_signatures"] = len(sigs)
    result["labelled_matchings"] = sum(d.count for d in diagrams)
    _dump(result, args.out)
    return EXIT_OK


# -- kernels ------------------------------------------------------------------


def _describe(kern: LagWindowKernel) -> dict:
    return {"name": kern.name, "k(0)": float(kern(0.0)), "k(1)": float(kern(1.0)), "integral": kern.integral()}


def _expr_kernel(expr: str, name: str) -> LagWindowKernel:
    namespace = {"np": np, "abs": np.abs, "cos": np.cos, "sin": np.sin, "exp": np.exp, "pi": np.pi, "where": np.where}
    try:
        code = compile(expr, "<kernel>", "eval")
    except SyntaxError as exc:
        raise UsageError(f"cannot parse kernel expression: {exc}") from exc

    def weight(u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(np.asarray(eval(code, {"__builtins__": {}}, {**namespace, "u": u}), dtype=float), u.shape)

    return LagWindowKernel(name, weight)


def cmd_kernels(args) -> int:
    if args.action == "list":
        _dump({"kernels": [_describe(k) for k in builtin_kernels().values()]}, args.out)
        return EXIT_OK
    if args.expr is None and args.name is None:
        raise UsageError("kernels validate needs --name or --expr")
    try:
        kern = get_kernel(args.name) if args.expr is None else _expr_kernel(args.expr, args.name or "custom")
    except KernelValidationError as exc:
        _dump({"valid": False, "error": str(exc)}, args.out)
        return EXIT_INVALID
    _dump({"valid": True, **_describe(kern)}, args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="base seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="polycoint", description="Hermite cointegration tools for long-memory series")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate x, eps, e, y to CSV")
    p.add_argument("--n", type=int, help="sample size")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="WCE estimate from a CSV with x and y columns")
    p.add_argument("input")
    p.add_argument("--K", type=int)
    p.add_argument("--kernel")
    p.add_argument("--M", type=int, help="bandwidth (default floor(n**theta))")
    p.add_argument("--bandwidth-exponent", dest="bandwidth_exponent", type=float)
    p.add_argument("--sigma2", type=float, help="variance of x (default: sample variance)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("montecarlo", parents=[common], help="replicated consistency experiment")
    p.add_argument("--replications", type=int)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("diagrams", parents=[common], help="enumerate diagrams for row orders, e.g. 3,3,3,3")
    p.add_argument("orders")
    p.add_argument("--labels", help="comma-separated row labels, e.g. x@0,e@p,x@r,e@r+q")
    p.add_argument("--cap", type=int, default=16, help="largest total vertex count")
    p.set_defaults(func=cmd_diagrams)

    p = sub.add_parser("kernels", parents=[common], help="list or validate lag-window kernels")
    p.add_argument("action", choices=["list", "validate"])
    p.add_argument("--name", help="built-in kernel name (or label for --expr)")
    p.add_argument("--expr", help="numpy expression in u, e.g. '1 - abs(u)'")
    p.set_defaults(func=cmd_kernels)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.jobs is not None and args.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        return args.func(args)
    except SingularSystemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (UsageError, AssumptionViolation, KernelValidationError, EnumerationTooLarge, KeyError, TypeError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
