"""Unbiased stochastic compression operators with machine-checkable noise contracts.

Each operator C satisfies E[C(z)] = z.  Two different noise contracts are
tracked per operator:

* ``alpha_bound(dim)``: a certified upper bound on the realized
  noise-to-signal ratio ||C(z) - z|| / ||z||, or inf when no such bound
  exists.  The magnitude-scaled stochastic quantizer gives sqrt(dim)/levels
  deterministically, which is what difference compression needs.
* ``variance_bound``: an input-independent bound on E||C(z) - z||^2, or inf.
  Only the synthetic sphere-noise operator has one; it exists to unit-test
  the extrapolation estimate recursion with an exactly known constant.

Randomness is always external: callers pass a numpy Generator, so operators
are pure given the stream and safe for parallel per-node use with per-node
streams.  1-D inputs are treated as one vector; 2-D inputs compress each
column independently (fresh draws per column from the same stream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

KINDS = ("identity", "quantize", "sparsify", "synthetic")

FULL_PRECISION_BITS = 32


@dataclass(frozen=True)
class Compressor:
    """Descriptor of an unbiased lossy operator; see :func:`compress`.

    kind:      one of identity | quantize | sparsify | synthetic.
    levels:    quantizer grid levels s >= 1 (grid {0, +-1/s, ..., +-1} of the
               per-vector max magnitude).
    keep_prob: sparsifier survival probability p in (0, 1]; kept entries are
               scaled by 1/p.
    noise_bound2: synthetic operator's exact per-call noise energy b^2
               (noise drawn uniformly on the radius-b sphere).
    """

    kind: str
    levels: int = 0
    keep_prob: float = 1.0
    noise_bound2: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown compressor kind {self.kind!r}; choose from {KINDS}")
        if self.kind == "quantize" and self.levels < 1:
            raise ConfigError(f"quantize needs levels >= 1, got {self.levels}")
        if self.kind == "sparsify" and not (0.0 < self.keep_prob <= 1.0):
            raise ConfigError(f"sparsify needs keep_prob in (0, 1], got {self.keep_prob}")
        if self.kind == "synthetic" and self.noise_bound2 < 0.0:
            raise ConfigError(f"synthetic needs noise_bound2 >= 0, got {self.noise_bound2}")

    def alpha_bound(self, dim: int) -> float:
        return effective_alpha(self, dim)

    @property
    def variance_bound(self) -> float:
        """Input-independent bound on E||C(z) - z||^2 (inf if none exists)."""
        if self.kind == "identity":
            return 0.0
        if self.kind == "synthetic":
            return self.noise_bound2
        return math.inf


def identity() -> Compressor:
    return Compressor(kind="identity")


def stochastic_quantize(levels: int) -> Compressor:
    return Compressor(kind="quantize", levels=levels)


def random_sparsify(keep_prob: float) -> Compressor:
    return Compressor(kind="sparsify", keep_prob=keep_prob)


def synthetic_noise(noise_bound2: float) -> Compressor:
    return Compressor(kind="synthetic", noise_bound2=noise_bound2)


def compress(c: Compressor, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one unbiased compressed sample of z.

    2-D input: every column is an independent vector (per-column scaling and
    per-column noise).  Empty input is returned unchanged.  Non-finite
    entries raise InputError.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim not in (1, 2):
        raise InputError(f"expected a vector or a matrix of columns, got ndim={z.ndim}")
    if z.size == 0:
        return z.copy()
    if not np.all(np.isfinite(z)):
        raise InputError("compression input contains non-finite entries")
    if c.kind == "identity":
        return z.copy()
    if c.kind == "quantize":
        return _quantize(z, c.levels, rng)
    if c.kind == "sparsify":
        keep = rng.random(z.shape) < c.keep_prob
        return np.where(keep, z / c.keep_prob, 0.0)
    # synthetic: additive noise uniform on the sphere of radius b, per column
    g = rng.standard_normal(z.shape)
    norms = np.linalg.norm(g, axis=0, keepdims=True) if z.ndim == 2 else np.linalg.norm(g)
    return z + math.sqrt(c.noise_bound2) * g / norms


def _quantize(z: np.ndarray, levels: int, rng: np.random.Generator) -> np.ndarray:
    """Magnitude-scaled stochastic rounding onto {0, +-1/s, ..., +-1} * ||z||_inf.

    Computing |z|/scale before multiplying by s keeps the level index in
    [0, s] exactly, so outputs never leave the grid; entries already on the
    grid pass through with probability one.
    """
    scale = np.max(np.abs(z), axis=0, keepdims=True) if z.ndim == 2 else np.max(np.abs(z))
    safe_scale = np.where(scale == 0.0, 1.0, scale)
    y = (np.abs(z) / safe_scale) * levels
    low = np.floor(y)
    frac = y - low
    level = low + (rng.random(z.shape) < frac)
    # all-zero columns have sign(z) = 0 everywhere, so safe_scale never leaks
    return np.sign(z) * level * (safe_scale / levels)


def effective_alpha(c: Compressor, dim: int) -> float:
    """Certified upper bound on sup ||C(z) - z|| / ||z|| over nonzero z.

    identity -> 0.  quantize -> sqrt(dim)/levels (per-entry error is at most
    ||z||_inf / levels, and ||z||_inf <= ||z||).  sparsify -> max(1, 1/p - 1):
    each coordinate's realized error is either |z_i| (dropped) or
    (1/p - 1)|z_i| (kept and rescaled), and both extremes are attainable.
    synthetic -> inf, since the added noise does not scale with the signal.
    """
    if dim < 1:
        raise InputError(f"dim must be >= 1, got {dim}")
    if c.kind == "identity":
        return 0.0
    if c.kind == "quantize":
        return math.sqrt(dim) / c.levels
    if c.kind == "sparsify":
        return max(1.0, 1.0 / c.keep_prob - 1.0)
    return math.inf


def bits_transmitted(c: Compressor, dim: int) -> int:
    """Accounting cost in bits of sending one compressed dim-vector.

    identity and synthetic send full precision.  The quantizer sends one
    grid index per entry (2*levels + 1 symbols) plus a 32-bit scale.  The
    sparsifier sends the expected p*dim surviving entries as (value, index)
    pairs, rounded up.
    """
    if dim < 1:
        raise InputError(f"dim must be >= 1, got {dim}")
    if c.kind in ("identity", "synthetic"):
        return FULL_PRECISION_BITS * dim
    if c.kind == "quantize":
        return dim * math.ceil(math.log2(2 * c.levels + 1)) + FULL_PRECISION_BITS
    index_bits = math.ceil(math.log2(dim)) if dim > 1 else 1
    return math.ceil(c.keep_prob * dim * (FULL_PRECISION_BITS + index_bits))
