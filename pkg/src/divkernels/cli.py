"""Command-line front end.

    divkernels <command> --config run.json [--set key=value]... [--out dir] [--seed n] [--threads n]

Exit status 0 on success, 2 on configuration or argument errors (nothing is
written), 1 on numerical failures (an error.json report is written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, apply_overrides, make_grid, make_kernel, validate
from .errors import ArgumentError, CapacityError, DivKernelsError, DomainError, IllConditionedError

THREADS_ENV = "DIVKERNELS_THREADS"
VALIDATION_ERRORS = (ArgumentError, DomainError, CapacityError, IllConditionedError)


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _csv(header: list, rows, meta: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _model(cfg, spec):
    from .division import build_subspace, default_anchors
    grid = make_grid(cfg.grid)
    count = cfg.params.get("n_anchors") or max(2, (2 * grid.n) // 3)
    return build_subspace(spec, grid, default_anchors(grid, count))


def cmd_extract_ab(cfg, meta):
    from .integrable import extract_AB, residual_report
    spec = make_kernel(cfg.kernel)
    grid = make_grid(cfg.grid)
    pair = extract_AB(spec, grid, cfg.params["p"], floor=cfg.params["anchor_floor"])
    res = residual_report(pair)
    rows = [(float(x), float(a.real), float(a.imag), float(b.real), float(b.imag))
            for x, a, b in zip(grid.nodes, pair.A.values, pair.B.values)]
    return {
        "ab.csv": _csv(["node", "A_real", "A_imag", "B_real", "B_imag"], rows, meta),
        "residuals.json": {**pair.to_dict(res)},
    }


def cmd_verify_division(cfg, meta):
    from .division import strong_division_operator, weak_division_operator
    S = _model(cfg, make_kernel(cfg.kernel))
    op = strong_division_operator if cfg.params["kind"] == "strong" else weak_division_operator
    D = op(S, cfg.params["center"], tolerance=cfg.params["tolerance"])
    return {"division.json": {"kind": D.kind, "center": D.center, "residual": D.residual,
                              "tolerance": cfg.params["tolerance"], "dimension": S.dim,
                              "operator_norm": D.norm, "rho": D.rho}}


def cmd_continue(cfg, meta):
    from .division import analytic_continue_ratio, analytic_continue_strong, division_operator
    spec = make_kernel(cfg.kernel)
    S = _model(cfg, spec)
    q, c0 = cfg.params["q"], cfg.params["center"]
    f = S.coeffs(spec(S.grid.nodes, np.full(S.grid.n, q)))
    kind = cfg.params["kind"]
    D = division_operator(S, c0, "strong" if kind == "strong" else "weak", tolerance=math.inf)
    out = []
    for re, im in cfg.params["z"]:
        z = complex(re, im)
        if kind == "strong":
            val = analytic_continue_strong(S, f, c0, z, D)
        else:
            val = analytic_continue_ratio(S, f, c0, z, D)
        out.append({"z": [re, im], "value": _cplx(val)})
    return {"continuation.json": {"kind": kind, "center": c0, "q": q, "values": out}}


def cmd_poles(cfg, meta):
    from .division import pole_set
    S = _model(cfg, make_kernel(cfg.kernel))
    p = cfg.params
    rep = pole_set(S, p["center"], p["kind"], centers=p["centers"], cosine=p["cosine"],
                   persist=p["persist"], collar=p["collar"])
    return {"poles.json": rep.to_dict()}


def cmd_blaschke(cfg, meta):
    from .debranges import blaschke_product
    from .division import blaschke_condition_sum
    p = cfg.params
    pts = [complex(re, im) for re, im in p["points"]]
    gen = p["generator"]
    if gen is not None:
        sign = -1 if p["halfplane"] == "lower" else 1
        pts = pts + [complex(0, sign * n) for n in range(1, gen["terms"] + 1)]
    s = blaschke_condition_sum(pts, p["halfplane"], p["cap"])
    result = {"halfplane": p["halfplane"], **s.to_dict()}
    if p["z"]:
        result["product"] = [{"z": list(z), "value": _cplx(blaschke_product(pts, p["halfplane"], complex(*z)))}
                             for z in p["z"]]
    return {"blaschke.json": result}


def cmd_kernel_eval(cfg, meta):
    from .kernels import kernel_matrix
    spec = make_kernel(cfg.kernel)
    xs, ys = cfg.params["x"], cfg.params["y"]
    if len(xs) != len(ys):
        raise ConfigError("params.x and params.y must have equal length")
    vals = spec(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)) if xs else []
    rows = [(float(x), float(y), float(complex(v).real), float(complex(v).imag)) for x, y, v in zip(xs, ys, vals)]
    files = {"kernel.csv": _csv(["x", "y", "K_real", "K_imag"], rows, meta)}
    if cfg.params["matrix"]:
        if cfg.grid is None:
            raise ConfigError("params.matrix needs a grid block")
        M = kernel_matrix(spec, make_grid(cfg.grid))
        files["matrix_real.csv"] = _csv([f"c{j}" for j in range(M.shape[1])], np.real(M).tolist(), meta)
        files["matrix_imag.csv"] = _csv([f"c{j}" for j in range(M.shape[1])], np.imag(M).tolist(), meta)
    return files


def cmd_sample_dpp(cfg, meta):
    from .dpp import sample_replicas
    spec = make_kernel(cfg.kernel)
    grid = make_grid(cfg.grid)
    window = cfg.params["window"] or list(grid.domain)
    configs, stats = None, None
    n = cfg.params["samples"]
    if n == 1:
        from .dpp import sample_dpp
        configs = [sample_dpp(spec, window, grid, cfg.seed)]
    else:
        configs, stats = sample_replicas(spec, window, grid, cfg.seed, n)
    rows = [(i, cfg.seed + i, x) for i, c in enumerate(configs) for x in c.points]
    files = {"points.csv": _csv(["replica", "seed", "point"], rows, meta)}
    summary = {"window": list(window), "counts": [len(c) for c in configs]}
    if stats is not None:
        summary["statistics"] = stats.to_dict()
    files["samples.json"] = summary
    return files


def cmd_gap_prob(cfg, meta):
    from .dpp import gap_probability
    spec = make_kernel(cfg.kernel)
    s, n = cfg.params["s"], cfg.params["n_quad"]
    return {"gap.json": {"s": s, "n_quad": n, "value": gap_probability(spec, s, n),
                         "value_2n": gap_probability(spec, s, 2 * n)}}


def cmd_trace_report(cfg, meta):
    from .dpp import local_trace_report
    spec = make_kernel(cfg.kernel)
    grid = make_grid(cfg.grid)
    omega = cfg.params["omega"]
    if omega is None:
        a, b = grid.domain
        omega = [a + 0.25 * (b - a), b - 0.25 * (b - a)]
    rep = local_trace_report(spec, omega, grid, cfg.params["epsilon"], cfg.params["anchor"])
    return {"trace.json": rep.to_dict()}


def cmd_stability(cfg, meta):
    from .integrable import stable_extract_sequence
    if "a" not in cfg.kernel and cfg.kernel["type"] not in ("sine", "perturbed-sine", "model-space"):
        raise ConfigError("stability sweeps the bandwidth 'a'; the kernel type has none")
    specs = [make_kernel({**cfg.kernel, "a": a}) for a in cfg.params["bandwidths"]]
    grid = make_grid(cfg.grid)
    _, rep = stable_extract_sequence(specs, grid, cfg.params["p"])
    return {"stability.json": {"bandwidths": cfg.params["bandwidths"], "p": cfg.params["p"], **rep.to_dict()}}


HANDLERS = {
    "extract-ab": cmd_extract_ab,
    "verify-division": cmd_verify_division,
    "continue": cmd_continue,
    "poles": cmd_poles,
    "blaschke": cmd_blaschke,
    "kernel-eval": cmd_kernel_eval,
    "sample-dpp": cmd_sample_dpp,
    "gap-prob": cmd_gap_prob,
    "trace-report": cmd_trace_report,
    "stability": cmd_stability,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="divkernels", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry (dotted key, JSON value); repeatable")
    ap.add_argument("--out", help="output directory (overrides config 'output')")
    ap.add_argument("--seed", type=int, help="base seed (overrides config 'seed')")
    ap.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or all cores)")
    return ap


def _load_config(args) -> dict:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg = apply_overrides(cfg, args.overrides)
    cfg.pop("version", None)
    if args.out is not None:
        cfg["output"] = args.out
    if args.seed is not None:
        cfg["seed"] = args.seed
    if "command" in cfg and cfg["command"] != args.command:
        raise ConfigError(f"config was resolved for {cfg['command']!r}, not {args.command!r}")
    return cfg


def _origin(exc: BaseException) -> str:
    """Name of the innermost package module on the traceback."""
    name = type(exc).__module__
    tb = exc.__traceback__
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("divkernels.") and mod != "divkernels.cli":
            name = mod
        tb = tb.tb_next
    return name


def _write(outdir: Path, files: dict, header: dict):
    outdir.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        body = files[name]
        if isinstance(body, dict):
            body = _dumps({**header, "result": body})
        (outdir / name).write_text(body, encoding="utf-8", newline="")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        cfg = validate(args.command, _load_config(args))
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.threads is not None:
        os.environ[THREADS_ENV] = str(args.threads)
    resolved = cfg.resolved(__version__)
    header = {"tool": "divkernels", "version": __version__, "config": resolved}
    outdir = Path(cfg.output)
    try:
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=args.threads):
            files = HANDLERS[cfg.command](cfg, header)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DivKernelsError, np.linalg.LinAlgError, FloatingPointError) as exc:
        kind = getattr(exc, "kind", type(exc).__name__)
        report = {"error": kind, "message": str(exc), "module": _origin(exc)}
        nearest = getattr(exc, "nearest", None)
        if nearest is not None:
            report["nearest_eigenvalue"] = _cplx(nearest)
        _write(outdir, {"error.json": report}, header)
        print(f"numeric error ({kind}): {exc}", file=sys.stderr)
        return 1
    _write(outdir, files, header)
    (outdir / "config.resolved.json").write_text(_dumps(resolved), encoding="utf-8", newline="")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
