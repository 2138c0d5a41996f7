"""Command-line interface: run / theory / cost / sweep subcommands.

Every output file starts with a comment block echoing the resolved
configuration (including a theory-resolved gamma), so results are
self-describing and byte-identical across repeated invocations.

Exit codes: 0 completed, 1 configuration error, 2 diverged run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from . import costmodel, engine, theory
from .compression import FULL_PRECISION_BITS, bits_transmitted, effective_alpha
from .config import (
    RunConfig, build_compressor, build_problem, build_topology,
    config_to_dict, parse_config, resolve_gamma, serialize_config,
)
from .errors import ConfigError, InfeasibleError, InputError, TopologyError

SWEEP_AXES = ("gamma", "levels", "n", "seed", "bandwidth", "latency")

RUN_ROW_FIELDS = (
    "axis", "value", "seed", "status", "gamma", "iterations", "final_loss",
    "final_grad_norm2", "min_grad_norm2", "final_consensus", "time_to_threshold",
    "total_bits",
)
COST_ROW_FIELDS = ("axis", "value", "seed", "status",
                   "allreduce_s", "decen_full_s", "decen_compressed_s")
GRID_FIELDS = ("bandwidth", "latency", "allreduce_s", "decen_full_s", "decen_compressed_s")

_CONFIG_ERRORS = (ConfigError, InfeasibleError, TopologyError, InputError)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def sweep(cfg: RunConfig, axis: str, values, seeds=None) -> list[dict]:
    """One summary row per (value, seed), in deterministic order.

    Per-entry failures land in the status column instead of aborting the
    sweep.  The bandwidth / latency axes evaluate the communication model
    rather than running the simulator.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    if axis in ("bandwidth", "latency"):
        return _cost_sweep(cfg, axis, values)
    rows = []
    if axis == "seed":
        entries = [(int(v), int(v)) for v in values]
    else:
        seed_list = [cfg.seed] if not seeds else [int(s) for s in seeds]
        entries = [(v, s) for v in values for s in seed_list]
    for value, seed in entries:
        row = dict.fromkeys(RUN_ROW_FIELDS, "")
        row.update(axis=axis, value=value, seed=seed)
        try:
            derived = _derive_config(cfg, axis, value, seed)
            result = engine.run(derived)
        except _CONFIG_ERRORS as exc:
            row["status"] = f"config_error: {exc}"
            rows.append(row)
            continue
        s = result.summary
        row.update(
            status=s.status, gamma=s.gamma, iterations=s.iterations,
            final_loss=s.final_loss, final_grad_norm2=s.final_grad_norm2,
            min_grad_norm2=s.min_grad_norm2,
            final_consensus=s.final_consensus,
            time_to_threshold="" if s.time_to_threshold is None else s.time_to_threshold,
            total_bits=s.total_bits,
        )
        rows.append(row)
    return rows


def _derive_config(cfg: RunConfig, axis: str, value, seed: int) -> RunConfig:
    cfg = dataclasses.replace(cfg, seed=seed)
    if axis == "seed":
        return cfg
    if axis == "gamma":
        return dataclasses.replace(cfg, gamma=float(value))
    if axis == "levels":
        if cfg.compressor.kind != "quantize":
            raise ConfigError(
                f"levels sweep needs a quantize compressor, got {cfg.compressor.kind!r}"
            )
        comp = dataclasses.replace(cfg.compressor, levels=int(value))
        return dataclasses.replace(cfg, compressor=comp)
    if axis == "n":
        if cfg.topology.kind == "custom":
            raise ConfigError("cannot sweep n over a custom edge list")
        topo = dataclasses.replace(cfg.topology, n=int(value))
        return dataclasses.replace(cfg, topology=topo)
    raise ConfigError(f"unsupported run axis {axis!r}")


def _cost_sweep(cfg: RunConfig, axis: str, values) -> list[dict]:
    net = cfg.network
    ratio = _compression_ratio(cfg)
    rows = []
    for value in values:
        bandwidth = float(value) if axis == "bandwidth" else net.bandwidths[0]
        latency = float(value) if axis == "latency" else net.latencies[0]
        row = dict.fromkeys(COST_ROW_FIELDS, "")
        row.update(axis=axis, value=value, seed=cfg.seed)
        try:
            grid = costmodel.cost_grid(
                n=cfg.topology.n, model_bits=FULL_PRECISION_BITS * net.model_dim,
                compression_ratio=ratio, steps_per_epoch=net.steps_per_epoch,
                degree=net.degree, compute_s=net.compute_s,
                bandwidths=[bandwidth], latencies=[latency],
            )[0]
        except _CONFIG_ERRORS as exc:
            row["status"] = f"config_error: {exc}"
            rows.append(row)
            continue
        row.update(status="completed", allreduce_s=grid["allreduce_s"],
                   decen_full_s=grid["decen_full_s"],
                   decen_compressed_s=grid["decen_compressed_s"])
        rows.append(row)
    return rows


def _compression_ratio(cfg: RunConfig) -> float:
    c = build_compressor(cfg.compressor)
    dim = cfg.network.model_dim
    return bits_transmitted(c, dim) / (FULL_PRECISION_BITS * dim)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _metadata_lines(cfg: RunConfig, extra: dict | None = None) -> list[str]:
    doc = config_to_dict(cfg)
    if extra:
        doc.update(extra)
    return ["# dcsgd output", f"# config: {json.dumps(doc, sort_keys=True)}"]


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace_csv(path: str, cfg: RunConfig, result: engine.RunResult) -> None:
    lines = _metadata_lines(cfg, {"resolved_gamma": result.summary.gamma,
                                  "status": result.summary.status})
    lines.append(",".join(engine.TraceRecord.FIELDS))
    for r in result.records:
        lines.append(",".join(_format_cell(getattr(r, f)) for f in engine.TraceRecord.FIELDS))
    _write_lines(path, lines)


def write_rows_csv(path: str, cfg: RunConfig, rows: list[dict], fields) -> None:
    lines = _metadata_lines(cfg)
    lines.append(",".join(fields))
    for row in rows:
        lines.append(",".join(_format_cell(row[f]) for f in fields))
    _write_lines(path, lines)


def _write_lines(path: str, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _summary_dict(summary: engine.RunSummary) -> dict:
    doc = dataclasses.asdict(summary)
    for k, v in doc.items():
        if isinstance(v, float) and not math.isfinite(v):
            doc[k] = repr(v)
    return doc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _load_config(args) -> RunConfig:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    result = engine.run(cfg)
    if args.out:
        write_trace_csv(args.out, cfg, result)
    print(json.dumps(_summary_dict(result.summary), sort_keys=True))
    return 0 if result.summary.status == "completed" else 2


def _cmd_theory(args) -> int:
    cfg = _load_config(args)
    W = build_topology(cfg.topology)
    master = np.random.SeedSequence(cfg.seed)
    problem_ss, _ = master.spawn(2)
    problem = build_problem(cfg.problem, W.n,
                            np.random.Generator(np.random.Philox(problem_ss)))
    c = build_compressor(cfg.compressor)
    alpha = effective_alpha(c, problem.dim)
    feasible = theory.dcd_feasible(W.rho, W.mu, alpha) if math.isfinite(alpha) else False
    doc = {
        "rho": W.rho, "mu": W.mu, "alpha": alpha if math.isfinite(alpha) else "unbounded",
        "L": problem.L, "sigma2": problem.sigma2, "zeta2": problem.zeta2,
        "dcd_feasible": feasible,
        "alpha_budget": (1.0 - W.rho) / (2.0 * W.mu),
    }
    try:
        doc["gamma"] = resolve_gamma(
            dataclasses.replace(cfg, gamma="theory"), problem, W, c)
    except InfeasibleError as exc:
        doc["gamma"] = f"unavailable: {exc}"
    if feasible:
        consts = theory.constants(W.rho, W.mu, alpha, problem.L, gamma=0.0)
        doc.update(D1=consts.D1, D2=consts.D2, C1=consts.C1)
    print(json.dumps(doc, sort_keys=True))
    return 0


def _cmd_cost(args) -> int:
    cfg = _load_config(args)
    net = cfg.network
    rows = costmodel.cost_grid(
        n=cfg.topology.n, model_bits=FULL_PRECISION_BITS * net.model_dim,
        compression_ratio=_compression_ratio(cfg),
        steps_per_epoch=net.steps_per_epoch, degree=net.degree,
        compute_s=net.compute_s, bandwidths=net.bandwidths, latencies=net.latencies,
    )
    write_rows_csv(args.out, cfg, rows, GRID_FIELDS)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    values = _parse_values(args.axis, args.values)
    seeds = [int(s) for s in args.seeds.split(",")] if args.seeds else None
    rows = sweep(cfg, args.axis, values, seeds)
    fields = COST_ROW_FIELDS if args.axis in ("bandwidth", "latency") else RUN_ROW_FIELDS
    write_rows_csv(args.out, cfg, rows, fields)
    return 0


def _parse_values(axis: str, text: str) -> list:
    items = [s for s in text.split(",") if s]
    if not items:
        raise ConfigError("--values must be a nonempty comma-separated list")
    if axis in ("levels", "n", "seed"):
        return [int(s) for s in items]
    return [float(s) for s in items]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcsgd",
        description="Desk-scale simulator for communication-compressed decentralized SGD",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configured run, write a trace CSV")
    p_run.add_argument("--config", required=True, help="JSON config path")
    p_run.add_argument("--out", default=None, help="trace CSV path ('-' for stdout)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.set_defaults(func=_cmd_run)

    p_theory = sub.add_parser(
        "theory", help="print rate constants, feasibility verdict and suggested gamma")
    p_theory.add_argument("--config", required=True)
    p_theory.add_argument("--seed", type=int, default=None)
    p_theory.set_defaults(func=_cmd_theory)

    p_cost = sub.add_parser("cost", help="write the communication-time grid CSV")
    p_cost.add_argument("--config", required=True)
    p_cost.add_argument("--out", default="-")
    p_cost.set_defaults(func=_cmd_cost)

    p_sweep = sub.add_parser("sweep", help="run the config across one swept axis")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--seeds", default=None, help="comma-separated seeds")
    p_sweep.add_argument("--out", default="-")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
