"""Tail probabilities of the prime polynomial and of log|zeta|.

The MGF of Re sum_{p<=x} p^(-1/2-it) is prod_p I0(z/sqrt(p)), which splits
as F(z) * exp(z^2 sigma^2 / 2) with F analytic and F(0) = 1.  This module
measures tails empirically, inverts the MGF exactly (through the
characteristic function prod J0), and evaluates the saddle-point line
integral whose main term is F(c) Q(delta).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from ._workers import run_chunks
from .critline import ZERO_SENTINEL, ZetaBatch, siegel_z_many
from .dirpoly import SampleBatch, eval_poly, loglog
from .errors import ConvergenceError
from .numkit import bessel_I0, gaussian_tail, log_i0_minus_quadratic
from .primes import PrimeTable, sigma_sq, table_for

RATIO = "ratio"
PAPER_LITERAL = "paper-literal"
ABSCISSAE = (RATIO, PAPER_LITERAL)

WILSON_Z95 = 1.959963984540054

_F_BLOCK = 1 << 21


# --- the factor F -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MgfProfile:
    """MGF prod_j I0(a_j z) of a sum of random-phase cosines a_j cos(U_j).

    For a prime table the amplitudes are 1/sqrt(p).  ``sigma_sq`` is the
    variance (1/2) sum a_j^2, except for the pure Gaussian profile, which has
    no amplitudes and F = 1.
    """

    sigma_sq: float
    amplitudes: np.ndarray
    x: int | None = None

    @classmethod
    def from_table(cls, table: PrimeTable) -> "MgfProfile":
        return cls(sigma_sq=sigma_sq(table), amplitudes=table.inv_sqrt, x=table.x_limit)

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "MgfProfile":
        a = np.asarray(amplitudes, dtype=float)
        if a.ndim != 1 or a.size == 0 or np.any(a <= 0):
            raise ValueError("amplitudes must be a non-empty list of positive reals")
        return cls(sigma_sq=0.5 * float(np.sum(a * a)), amplitudes=a)

    @classmethod
    def gaussian(cls, sigma_sq: float) -> "MgfProfile":
        if not sigma_sq > 0:
            raise ValueError("sigma_sq must be > 0")
        return cls(sigma_sq=float(sigma_sq), amplitudes=np.zeros(0))

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)

    def log_F(self, z):
        """sum_j [log I0(a_j z) - a_j^2 z^2 / 4], complex, in log space."""
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        flat = zz.reshape(-1)
        out = np.zeros(flat.shape, dtype=complex)
        a = self.amplitudes
        if a.size:
            step = max(1, _F_BLOCK // max(flat.size, 1))
            for lo in range(0, a.size, step):
                blk = a[lo : lo + step]
                out += np.sum(log_i0_minus_quadratic(flat[:, None] * blk[None, :]), axis=1)
        out = out.reshape(zz.shape)
        return complex(out[0]) if np.ndim(z) == 0 else out

    def F(self, z):
        return np.exp(self.log_F(z))

    def product(self, z):
        """prod_j I0(a_j z) rebuilt as F(z) exp(z^2 sigma^2 / 2)."""
        zz = np.asarray(z, dtype=complex)
        return np.exp(self.log_F(z) + 0.5 * self.sigma_sq * zz * zz)

    def tabulate(self, zs) -> dict:
        return {complex(z): complex(f) for z, f in zip(zs, np.atleast_1d(self.F(np.asarray(zs))))}


def F_factor(table: PrimeTable, z):
    """F(z) = prod_{p<=x} I0(z/sqrt(p)) exp(-z^2/(4p)) for |z| <= 10."""
    if np.any(np.abs(np.asarray(z)) > 10):
        raise ValueError("F_factor needs |z| <= 10")
    return MgfProfile.from_table(table).F(z)


def F_tail_bound(z: complex, p_lo: float, p_hi: float) -> float:
    """Bound on |F(z, p_hi) - F(z, p_lo)| from the quartic term of log I0.

    Sums |z|^4 / (32 p^2) over primes in (p_lo, p_hi].
    """
    ps = table_for(int(p_hi)).primes
    ps = ps[ps > p_lo].astype(float)
    return float(abs(z) ** 4 / 32.0 * np.sum(1.0 / (ps * ps)))


def c_k_estimate(k: float, x: int) -> float:
    """F(k) at finite x, the constant multiplying Q(delta) in the corrected tail."""
    if not 0 < k <= 4:
        raise ValueError("c_k_estimate needs 0 < k <= 4")
    if x < 1000:
        raise ValueError("c_k_estimate needs x >= 1000")
    return float(F_factor(table_for(int(x)), float(k)).real)


# --- decay on vertical lines ---------------------------------------------------

def bessel_decay_check(table: PrimeTable, re_z: float, im_grid) -> np.ndarray:
    """|prod_p I0((re_z + i y)/sqrt(p))| for y in ``im_grid``.

    The grid must satisfy 0 < 2 re_z <= min y and max y <= x^(1/8).
    """
    y = np.asarray(im_grid, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("im_grid must be a non-empty list")
    if re_z < 0:
        raise ValueError("re_z must be >= 0")
    if np.any(y <= 0):
        raise ValueError("imaginary parts must be > 0")
    if 4 * re_z * re_z > y.min() ** 2:
        raise ValueError(f"4 re_z^2 = {4 * re_z * re_z:g} exceeds min(Im)^2 = {y.min() ** 2:g}")
    cap = table.x_limit ** 0.125
    if y.max() > cap:
        raise ValueError(f"max(Im) = {y.max():g} exceeds x^(1/8) = {cap:g}")
    z = re_z + 1j * y
    log_abs = np.zeros(y.size)
    a = table.inv_sqrt
    step = max(1, _F_BLOCK // y.size)
    for lo in range(0, a.size, step):
        w = z[:, None] * a[None, lo : lo + step]
        with np.errstate(divide="ignore"):
            log_abs += np.sum(np.log(np.abs(bessel_I0(w))), axis=1)
    return np.exp(log_abs)


def decay_envelope_fit(im_grid, values) -> np.ndarray:
    """Least-squares quadratic a2 y^2 + a1 y + a0 through log(values)."""
    return np.polyfit(np.asarray(im_grid, float), np.log(np.asarray(values, float)), 2)


# --- saddle point ---------------------------------------------------------------

def _profile(obj) -> MgfProfile:
    if isinstance(obj, MgfProfile):
        return obj
    if isinstance(obj, PrimeTable):
        return MgfProfile.from_table(obj)
    raise TypeError("expected a PrimeTable or MgfProfile")


def saddle_abscissa(profile: MgfProfile, delta: float, abscissa: str = RATIO) -> float:
    if abscissa == RATIO:
        return delta / profile.sigma
    if abscissa == PAPER_LITERAL:
        return delta / math.sqrt(profile.sigma)
    raise ValueError(f"abscissa must be one of {ABSCISSAE}")


def saddle_tail(
    profile,
    delta: float,
    psi: float = 8.0,
    abscissa: str = RATIO,
    rtol: float = 1e-6,
    max_nodes: int = 1 << 14,
) -> float:
    """Truncated vertical-line integral for P(X >= delta * sigma).

    With s = c + i v / sigma the integrand is
    F(s) exp(s^2 sigma^2 / 2 - s delta sigma) / s, integrated over
    |v| <= psi and scaled by 1 / (2 pi sigma).  For c = delta / sigma the
    exponential reduces to exp(-delta^2/2 - v^2/2).  Gauss-Legendre on each
    half of the range, doubling the node count from 64 until two successive
    values agree to ``rtol``.
    """
    prof = _profile(profile)
    if not delta > 0:
        raise ValueError("saddle_tail needs delta > 0")
    if psi < 5:
        raise ValueError("psi must be >= 5")
    c = saddle_abscissa(prof, delta, abscissa)
    if c > 4:
        raise ValueError(f"abscissa c = {c:.4g} above 4")
    sigma = prof.sigma

    def integral(n):
        nodes, weights = special.roots_legendre(n)
        v = np.concatenate([0.5 * psi * (nodes - 1), 0.5 * psi * (nodes + 1)])
        w = np.concatenate([weights, weights]) * 0.5 * psi
        s = c + 1j * v / sigma
        expo = prof.log_F(s) + 0.5 * (s * sigma) ** 2 - s * delta * sigma
        return float(np.sum(w * (np.exp(expo) / s)).real) / (2 * math.pi * sigma)

    n = 64
    prev = integral(n)
    while n < max_nodes:
        n *= 2
        cur = integral(n)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise ConvergenceError(f"saddle integral not stable to {rtol:g} with {n} nodes per half")


def corrected_tail(profile, delta, abscissa: str = RATIO):
    """Main term F(c) Q(delta)."""
    prof = _profile(profile)
    d = np.asarray(delta, dtype=float)
    c = saddle_abscissa(prof, d, abscissa)
    out = np.real(prof.F(c)) * gaussian_tail(d)
    return float(out) if np.ndim(delta) == 0 else out


# --- exact distribution of the cosine sum --------------------------------------

_GL20 = special.roots_legendre(20)


def _j0_product(a: np.ndarray, xi: np.ndarray) -> np.ndarray:
    out = np.ones_like(xi)
    step = max(1, _F_BLOCK // max(xi.size, 1))
    for lo in range(0, a.size, step):
        out *= np.prod(special.j0(xi[:, None] * a[None, lo : lo + step]), axis=1)
    return out


def _xi_cutoff(a: np.ndarray, tol: float) -> float:
    # |J0(u)| <= sqrt(2 / (pi u)), so the characteristic function is
    # dominated by prod min(1, sqrt(2 / (pi a xi)))
    log_a = np.log(a)
    xi = 1.0
    while xi < 1e5:
        bound = np.sum(np.minimum(0.0, 0.5 * (math.log(2 / math.pi) - log_a - math.log(xi))))
        if bound <= math.log(tol):
            return xi
        xi *= 1.25
    raise ValueError("too few amplitudes for Fourier inversion of the tail")


def exact_tail(profile, delta, tol: float = 1e-12):
    """P(X > delta * sigma) for X = sum_j a_j cos(U_j), with no sampling.

    Gil-Pelaez inversion of the characteristic function prod_j J0(a_j xi):
    P(X > u) = 1/2 - (1/pi) int_0^inf sin(xi u) phi(xi) / xi dxi.  A single
    amplitude uses the closed form arccos(u/a)/pi instead.
    """
    prof = _profile(profile)
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    u = d * prof.sigma
    a = prof.amplitudes
    if a.size == 0:
        out = gaussian_tail(d)
    elif a.size == 1:
        out = np.arccos(np.clip(u / a[0], -1.0, 1.0)) / math.pi
    else:
        xi_max = _xi_cutoff(a, tol)
        freq = float(np.max(np.abs(u))) + float(a.sum())
        n_panels = int(math.ceil(xi_max * freq / math.pi)) + 1
        edges = np.linspace(0.0, xi_max, n_panels + 1)
        x0, w0 = _GL20
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        xi = (mid[:, None] + half[:, None] * x0[None, :]).reshape(-1)
        wt = (half[:, None] * w0[None, :]).reshape(-1)
        phi_over = _j0_product(a, xi) / xi * wt
        out = 0.5 - (np.sin(np.outer(u, xi)) @ phi_over) / math.pi
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(delta) == 0 else out


# --- empirical tails ---------------------------------------------------------------

def wilson_interval(successes: int, n: int, z: float = WILSON_Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("wilson_interval needs n > 0")
    if not 0 <= successes <= n:
        raise ValueError("successes must lie in [0, n]")
    p = successes / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    # the endpoints at k = 0 and k = n are exactly 0 and 1; avoid rounding residue
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def wilson_halfwidth(successes: int, n: int, z: float = WILSON_Z95) -> float:
    lo, hi = wilson_interval(successes, n, z)
    return 0.5 * (hi - lo)


def batch_scale(batch) -> float:
    """Normalising scale: sigma(x) for a polynomial batch, sqrt(loglog T / 2) for zeta."""
    if isinstance(batch, SampleBatch):
        return math.sqrt(sigma_sq(table_for(batch.config.x)))
    if isinstance(batch, ZetaBatch):
        return math.sqrt(0.5 * loglog(batch.T))
    raise TypeError("batch must be a SampleBatch or ZetaBatch")


def tail_counts(values: np.ndarray, thresholds) -> np.ndarray:
    """Number of values >= each threshold."""
    s = np.sort(np.asarray(values, dtype=float))
    return s.size - np.searchsorted(s, np.asarray(thresholds, dtype=float), side="left")


def empirical_tail(batch, delta: float, scale: float | None = None) -> tuple[float, float]:
    """Fraction of samples >= delta * scale and its 95% Wilson half-width."""
    n = len(batch)
    if n == 0:
        raise ValueError("empirical_tail of an empty batch")
    scale = batch_scale(batch) if scale is None else scale
    k = int(np.count_nonzero(batch.values >= delta * scale))
    return k / n, wilson_halfwidth(k, n)


# --- random-cosine model ------------------------------------------------------------

def hwang_check(amplitudes, delta_grid, n_replicas: int = 10**7, seed: int = 0, chunk: int = 1 << 16):
    """Simulated tails of sum_j a_j cos(U_j) against the Gaussian prediction.

    Each replica draws fresh uniform phases.  Chunk i uses the Philox stream
    of ``seed`` advanced by i jumps, so results do not depend on threading.
    Returns (Q(delta), simulated P(X >= delta sigma)) for each grid point.
    """
    prof = MgfProfile.from_amplitudes(amplitudes)
    a = prof.amplitudes
    grid = np.asarray(delta_grid, dtype=float)
    thr = grid * prof.sigma
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    base = np.random.Philox(key=int(seed))

    def block(lo, hi):
        rng = np.random.Generator(base.jumped(lo // chunk))
        vals = np.cos((2 * math.pi) * rng.random((hi - lo, a.size))) @ a
        return tail_counts(vals, thr)

    counts = np.sum(run_chunks(block, int(n_replicas), chunk), axis=0)
    sim = counts / n_replicas
    return [(float(gaussian_tail(d)), float(s)) for d, s in zip(grid, sim)]


# --- discrepancy -----------------------------------------------------------------

@dataclass
class DiscrepancyResult:
    T: float
    x: int
    k_list: list
    moments: list
    dropped: int
    n_used: int
    A_fit: float
    bound_shape: list = field(default_factory=list)


def discrepancy_bound_shape(k: int, A: float, T: float) -> float:
    """A^k k^(4k) + A^k k^k (logloglog T)^k."""
    lll = math.log(loglog(T))
    return A**k * (k ** (4 * k) + k**k * lll**k)


def discrepancy_moments(T: float, x: int, n: int, k_list, seed: int = 0) -> DiscrepancyResult:
    """Sample means of |log|zeta(1/2+it)| - Re sum_{p<=x} p^(-1/2-it)|^(2k).

    Points with |Z(t)| < 1e-6 are dropped and counted.  ``A_fit`` is the
    smallest A for which the bound shape covers every measured k >= 1.
    """
    ks = [int(k) for k in k_list]
    if any(k < 0 or k > 4 for k in ks):
        raise ValueError("discrepancy moments supported for 0 <= k <= 4")
    if n < 10_000:
        raise ValueError("discrepancy_moments needs n >= 1e4")
    if math.log(loglog(T)) <= 0:
        raise ValueError("T too small: logloglog T must be positive")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    t = T * (1.0 + rng.random(n))
    z = siegel_z_many(t)
    keep = np.abs(z) >= ZERO_SENTINEL
    d = np.abs(np.log(np.abs(z[keep])) - eval_poly(table_for(int(x)), t[keep]))
    moments = [float(np.mean(d ** (2 * k))) for k in ks]
    lll = math.log(loglog(T))
    A = 0.0
    for k, m in zip(ks, moments):
        if k >= 1:
            A = max(A, (m / (k ** (4 * k) + k**k * lll**k)) ** (1.0 / k))
    shape = [discrepancy_bound_shape(k, A, T) for k in ks]
    return DiscrepancyResult(
        T=float(T), x=int(x), k_list=ks, moments=moments, dropped=int(n - keep.sum()),
        n_used=int(keep.sum()), A_fit=A, bound_shape=shape,
    )


# --- reports ------------------------------------------------------------------------

TAIL_CSV_HEADER = ["delta", "empirical", "ci_halfwidth", "gaussian", "corrected", "saddle"]


def _opt(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


@dataclass
class TailReport:
    """Per-delta tail records; columns that were not computed hold None."""

    delta_grid: list
    empirical: list
    gaussian: list
    corrected: list
    saddle_numeric: list
    ci_halfwidth: list
    config: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        n = len(self.delta_grid)
        cols = (self.empirical, self.gaussian, self.corrected, self.saddle_numeric, self.ci_halfwidth)
        if any(len(c) != n for c in cols):
            raise ValueError("TailReport columns must match the delta grid")
        self.delta_grid = [float(d) for d in self.delta_grid]
        self.empirical, self.gaussian, self.corrected, self.saddle_numeric, self.ci_halfwidth = (
            [_opt(v) for v in c] for c in cols
        )
        for name, col in (("empirical", self.empirical), ("gaussian", self.gaussian),
                          ("corrected", self.corrected), ("saddle", self.saddle_numeric)):
            if any(v is not None and not 0.0 <= v <= 1.0 for v in col):
                raise ValueError(f"{name} column has values outside [0, 1]")
        g = self.gaussian
        if any(v is None for v in g) or any(b >= a for a, b in zip(g, g[1:])):
            raise ValueError("gaussian column must be present and strictly decreasing")

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "delta": self.delta_grid,
            "empirical": self.empirical,
            "ci": self.ci_halfwidth,
            "gaussian": self.gaussian,
            "corrected": self.corrected,
            "saddle": self.saddle_numeric,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TailReport":
        return cls(
            delta_grid=d["delta"], empirical=d["empirical"], gaussian=d["gaussian"],
            corrected=d["corrected"], saddle_numeric=d["saddle"], ci_halfwidth=d["ci"],
            config=d.get("config", {}), seed=int(d.get("seed", 0)),
        )

    def to_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_json(cls, path) -> "TailReport":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TAIL_CSV_HEADER)
        for row in zip(self.delta_grid, self.empirical, self.ci_halfwidth, self.gaussian,
                       self.corrected, self.saddle_numeric):
            w.writerow(["" if v is None else repr(v) for v in row])
        return buf.getvalue()

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.write_text(self.csv_text())
        return path

    def corrected_closer_fraction(self) -> float | None:
        """Share of grid points where F(c)Q is nearer the empirical tail than Q."""
        pts = [(e, g, c) for e, g, c in zip(self.empirical, self.gaussian, self.corrected)
               if e is not None and c is not None]
        if not pts:
            return None
        return sum(abs(c - e) < abs(g - e) for e, g, c in pts) / len(pts)
