"""Run configuration: parsing, validation, defaulting, and object builders.

Configs are JSON documents with the sections below; unknown keys are
rejected by name so typos fail loudly.  ``gamma`` may be an explicit
positive number or the string "theory", which resolves through the rate
theory for the configured algorithm and is echoed into output metadata.

    {
      "algorithm":  "dpsgd" | "naive" | "dcd" | "ecd" | "centralized",
      "topology":   {"kind": "ring" | "complete" | "custom", "n": 8,
                     "edges": [[0,1], ...], "self_weights": [...]},
      "problem":    {"kind": "quadratic", "dim": 16, "heterogeneity": 0.0, "noise": 0.0}
                 or {"kind": "logistic", "dim": 8, "samples_per_node": 32,
                     "separation": 1.0, "reg": 0.1},
      "compressor": {"kind": "identity"}
                 or {"kind": "quantize", "levels": 127}
                 or {"kind": "sparsify", "keep_prob": 0.25}
                 or {"kind": "synthetic", "noise_bound": 1.0},
      "gamma": "theory", "T": 1000, "seed": 0, "trace_every": 10,
      "grad_threshold": 1e-6, "z_norm_cap": 1e9,
      "network": {"model_dim": 270000, "steps_per_epoch": 98, "compute_s": 0.15,
                  "degree": 2, "bandwidths": [...], "latencies": [...]}
    }
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import costmodel, problems, theory, topology
from .compression import Compressor, effective_alpha
from .errors import ConfigError, TopologyError

ALGORITHMS = ("dpsgd", "naive", "dcd", "ecd", "centralized")


@dataclass(frozen=True)
class TopologySpec:
    kind: str = "ring"
    n: int = 8
    edges: tuple = ()
    self_weights: tuple = ()


@dataclass(frozen=True)
class ProblemSpec:
    kind: str = "quadratic"
    dim: int = 16
    heterogeneity: float = 0.0
    noise: float = 0.0
    samples_per_node: int = 32
    separation: float = 1.0
    reg: float = 0.1


@dataclass(frozen=True)
class CompressorSpec:
    kind: str = "identity"
    levels: int = 127
    keep_prob: float = 0.25
    noise_bound: float = 1.0  # variance bound b^2 of the synthetic operator


@dataclass(frozen=True)
class NetworkConfig:
    model_dim: int = 270_000
    steps_per_epoch: int = 98
    compute_s: float = 0.15
    degree: int = 2
    bandwidths: tuple = costmodel.DEFAULT_BANDWIDTHS
    latencies: tuple = costmodel.DEFAULT_LATENCIES


@dataclass(frozen=True)
class RunConfig:
    algorithm: str
    topology: TopologySpec = TopologySpec()
    problem: ProblemSpec = ProblemSpec()
    compressor: CompressorSpec = CompressorSpec()
    gamma: float | str = "theory"
    T: int = 1000
    seed: int = 0
    trace_every: int = 10
    grad_threshold: float = 1e-6
    z_norm_cap: float = 1e9
    network: NetworkConfig = NetworkConfig()


_SECTION_TYPES = {
    "topology": TopologySpec,
    "problem": ProblemSpec,
    "compressor": CompressorSpec,
    "network": NetworkConfig,
}


def config_from_dict(doc: dict) -> RunConfig:
    """Build and validate a RunConfig from a plain dict."""
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be an object, got {type(doc).__name__}")
    doc = dict(doc)
    known = {"algorithm", "gamma", "T", "seed", "trace_every", "grad_threshold",
             "z_norm_cap", *_SECTION_TYPES}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    kwargs = {}
    for section, cls in _SECTION_TYPES.items():
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be an object")
        valid = set(cls.__dataclass_fields__)
        bad = sorted(set(sub) - valid)
        if bad:
            raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(bad)}")
        sub = {k: tuple(map(tuple, v)) if k == "edges" else tuple(v) if isinstance(v, list) else v
               for k, v in sub.items()}
        kwargs[section] = cls(**sub)
    for key in ("gamma", "T", "seed", "trace_every", "grad_threshold", "z_norm_cap"):
        if key in doc:
            kwargs[key] = doc[key]
    kwargs["algorithm"] = doc.get("algorithm", "")
    cfg = RunConfig(**kwargs)
    validate_config(cfg)
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse a JSON config document into a validated RunConfig."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(cfg: RunConfig) -> dict:
    doc = asdict(cfg)
    doc["topology"]["edges"] = [list(e) for e in cfg.topology.edges]
    doc["topology"]["self_weights"] = list(cfg.topology.self_weights)
    doc["network"]["bandwidths"] = list(cfg.network.bandwidths)
    doc["network"]["latencies"] = list(cfg.network.latencies)
    return doc


def serialize_config(cfg: RunConfig) -> str:
    """Canonical JSON form; parse(serialize(cfg)) == cfg."""
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def validate_config(cfg: RunConfig) -> None:
    """Raise ConfigError on anything a run could not execute."""
    if not cfg.algorithm:
        raise ConfigError("missing required key 'algorithm'")
    if cfg.algorithm not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {cfg.algorithm!r}")
    if not isinstance(cfg.T, int) or cfg.T < 0:
        raise ConfigError(f"T must be a nonnegative integer, got {cfg.T!r}")
    if not isinstance(cfg.seed, int):
        raise ConfigError(f"seed must be an integer, got {cfg.seed!r}")
    if not isinstance(cfg.trace_every, int) or cfg.trace_every < 1:
        raise ConfigError(f"trace_every must be a positive integer, got {cfg.trace_every!r}")
    if isinstance(cfg.gamma, str):
        if cfg.gamma != "theory":
            raise ConfigError(f"gamma must be a positive number or 'theory', got {cfg.gamma!r}")
    elif not (isinstance(cfg.gamma, (int, float)) and cfg.gamma > 0):
        raise ConfigError(f"gamma must be a positive number or 'theory', got {cfg.gamma!r}")
    if cfg.grad_threshold < 0:
        raise ConfigError("grad_threshold must be >= 0")
    if cfg.z_norm_cap <= 0:
        raise ConfigError("z_norm_cap must be > 0")

    try:
        build_topology(cfg.topology)   # validates structure and connectivity
    except TopologyError as exc:
        raise ConfigError(f"topology: {exc}") from exc
    c = build_compressor(cfg.compressor)
    if cfg.problem.kind not in ("quadratic", "logistic"):
        raise ConfigError(f"problem kind must be quadratic or logistic, got {cfg.problem.kind!r}")
    if cfg.problem.dim < 1:
        raise ConfigError(f"problem dim must be >= 1, got {cfg.problem.dim}")
    if cfg.problem.kind == "logistic" and cfg.problem.samples_per_node < 1:
        raise ConfigError("samples_per_node must be >= 1")
    if cfg.algorithm == "dcd" and not math.isfinite(effective_alpha(c, cfg.problem.dim)):
        raise ConfigError(
            f"algorithm 'dcd' needs a compressor with a finite noise-to-signal "
            f"bound; {cfg.compressor.kind!r} has none"
        )


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_topology(spec: TopologySpec) -> topology.MixingMatrix:
    if spec.kind == "ring":
        return topology.build_ring(spec.n)
    if spec.kind == "complete":
        return topology.build_fully_connected(spec.n)
    if spec.kind == "custom":
        if not spec.edges:
            raise ConfigError("custom topology needs a nonempty 'edges' list")
        self_weights = spec.self_weights or None
        return topology.build_custom(spec.n, list(spec.edges), self_weights)
    raise ConfigError(f"topology kind must be ring, complete or custom, got {spec.kind!r}")


def build_problem(spec: ProblemSpec, n: int, rng: np.random.Generator) -> problems.Problem:
    if spec.kind == "quadratic":
        return problems.make_quadratic(
            spec.dim, n, heterogeneity=spec.heterogeneity, noise=spec.noise, rng=rng
        )
    return problems.make_logistic(
        spec.dim, n, spec.samples_per_node, separation=spec.separation,
        rng=rng, reg=spec.reg,
    )


def build_compressor(spec: CompressorSpec) -> Compressor:
    if spec.kind == "identity":
        return Compressor(kind="identity")
    if spec.kind == "quantize":
        return Compressor(kind="quantize", levels=spec.levels)
    if spec.kind == "sparsify":
        return Compressor(kind="sparsify", keep_prob=spec.keep_prob)
    if spec.kind == "synthetic":
        return Compressor(kind="synthetic", noise_bound2=spec.noise_bound)
    raise ConfigError(
        f"compressor kind must be identity, quantize, sparsify or synthetic, got {spec.kind!r}"
    )


def resolve_gamma(cfg: RunConfig, problem, W, c: Compressor) -> float:
    """Explicit gamma, or the algorithm's theoretical step size.

    Algorithms without a step-size rule of their own (dpsgd, naive, centralized) use
    the uncompressed difference-family value (alpha = 0; rho = 0 as well for
    the centralized baseline).
    """
    if not isinstance(cfg.gamma, str):
        return float(cfg.gamma)
    sigma = math.sqrt(problem.sigma2)
    zeta = math.sqrt(problem.zeta2)
    T = max(cfg.T, 1)
    if cfg.algorithm == "ecd":
        return theory.gamma_ecd(problem.L, sigma, zeta, W.n, T, C1=1.0 / (1.0 - W.rho) ** 2)
    if cfg.algorithm == "dcd":
        alpha = effective_alpha(c, problem.dim)
        consts = theory.constants(W.rho, W.mu, alpha, problem.L, gamma=0.0)
        return theory.gamma_dcd(problem.L, sigma, zeta, W.n, T, D1=consts.D1, D2=consts.D2)
    if cfg.algorithm == "centralized":
        return theory.gamma_dcd(problem.L, sigma, zeta, W.n, T, D1=1.0, D2=0.0)
    # dpsgd / naive: uncompressed decentralized value
    return theory.gamma_dcd(
        problem.L, sigma, zeta, W.n, T, D1=1.0 / (1.0 - W.rho) ** 2, D2=0.0
    )
