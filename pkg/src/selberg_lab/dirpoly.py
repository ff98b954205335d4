"""The prime Dirichlet polynomial Re sum_{p<=x} p^(-1/2-it) and its samples.

x and T are independent knobs here.  ``default_x`` gives the coupling
x = T^(1/(loglog T)^2) when it is wanted, but at desk-scale T that
coupling leaves fewer than ten primes.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize

from ._workers import run_chunks
from .errors import AliasingWarning
from .primes import PrimeTable

UNIFORM_RANDOM = "uniform_random"
EQUISPACED = "equispaced"
GRIDS = (UNIFORM_RANDOM, EQUISPACED)

# matrix block (samples x primes) evaluated at once
_BLOCK_ELEMENTS = 1 << 21


def loglog(T: float) -> float:
    if T <= math.e:
        raise ValueError(f"loglog({T}) undefined or non-positive; need T > e")
    return math.log(math.log(T))


def default_x(T: float) -> int:
    """floor(T^(1/(loglog T)^2))."""
    ll = loglog(T)
    return int(math.floor(math.exp(math.log(T) / (ll * ll))))


def coupled_loglog(x: float) -> float:
    """loglog T for the T whose coupled length T^(1/(loglog T)^2) equals x.

    Solves L / (log L)^2 = log x for L = log T on the increasing branch
    L >= e^2.  Used to pick moment cutoffs on the scale the coupling implies.
    """
    target = math.log(x)
    f = lambda L: L / math.log(L) ** 2 - target
    lo = math.e**2
    if f(lo) >= 0:
        return 2.0
    hi = lo
    while f(hi) < 0:
        hi *= 2
    return math.log(optimize.brentq(f, lo, hi, xtol=1e-12))


@dataclass
class PolyConfig:
    x: int
    T: float
    n_samples: int
    seed: int = 0
    grid: str = UNIFORM_RANDOM
    a_threshold: float | None = None  # None -> loglog T

    def __post_init__(self):
        if self.x < 2:
            raise ValueError("x must be >= 2")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.grid not in GRIDS:
            raise ValueError(f"grid must be one of {GRIDS}")
        if self.a_threshold is None:
            self.a_threshold = loglog(self.T)
        if not self.a_threshold > 0:
            raise ValueError("a_threshold must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SampleBatch:
    t_values: np.ndarray
    values: np.ndarray
    in_A: np.ndarray
    config: PolyConfig
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (len(self.t_values) == len(self.values) == len(self.in_A)):
            raise ValueError("SampleBatch arrays must have equal length")

    def __len__(self):
        return int(self.values.size)


def eval_poly(table: PrimeTable, t):
    """sum_{p<=x} cos(t log p) / sqrt(p) at scalar or array t."""
    if len(table) == 0:
        raise ValueError("eval_poly on an empty prime table")
    tt = np.asarray(t, dtype=float)
    flat = tt.reshape(-1)
    P = len(table)
    rows = max(1, _BLOCK_ELEMENTS // P)

    def block(lo, hi):
        # numpy sums a contiguous axis pairwise
        return (np.cos(np.outer(flat[lo:hi], table.log_p)) * table.inv_sqrt).sum(axis=1)

    if flat.size == 0:
        return flat.copy()
    out = np.concatenate(run_chunks(block, flat.size, rows)).reshape(tt.shape)
    return float(out) if out.ndim == 0 else out


def sample_t(config: PolyConfig, log_x: float | None = None) -> np.ndarray:
    n, T = config.n_samples, config.T
    if config.grid == UNIFORM_RANDOM:
        rng = np.random.Generator(np.random.Philox(key=int(config.seed)))
        return T * (1.0 + rng.random(n))
    spacing = T / n
    log_x = math.log(config.x) if log_x is None else log_x
    if log_x > 0 and spacing > 2 * math.pi / (10 * log_x):
        warnings.warn(
            f"equispaced spacing {spacing:.3g} exceeds 2pi/(10 log x) = {2 * math.pi / (10 * log_x):.3g}",
            AliasingWarning,
            stacklevel=3,
        )
    return T + spacing * np.arange(n, dtype=float)


def sample_poly(config: PolyConfig, table: PrimeTable) -> SampleBatch:
    """Evaluate the polynomial on the configured t-grid and flag the set A."""
    if table.x_limit != config.x:
        raise ValueError(f"table built for x={table.x_limit}, config has x={config.x}")
    t = sample_t(config)
    values = eval_poly(table, t)
    return SampleBatch(t_values=t, values=values, in_A=np.abs(values) <= config.a_threshold, config=config)


def measure_Ac(batch: SampleBatch) -> float:
    """Fraction of samples outside A (|value| > threshold)."""
    if len(batch) == 0:
        raise ValueError("measure_Ac of an empty batch")
    return float(np.count_nonzero(~batch.in_A)) / len(batch)


def write_batch(batch: SampleBatch, path) -> tuple[Path, Path]:
    """CSV ``t,value,in_A`` plus a JSON sidecar holding the PolyConfig."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value", "in_A"])
        for t, v, a in zip(batch.t_values, batch.values, batch.in_A):
            w.writerow([repr(float(t)), repr(float(v)), int(a)])
    side = path.with_suffix(".json")
    side.write_text(json.dumps({"config": batch.config.to_dict(), **batch.meta}, indent=2, sort_keys=True) + "\n")
    return path, side
