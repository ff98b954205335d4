"""Values of zeta on the critical line.

Z(t) = exp(i theta(t)) zeta(1/2 + it) is real and |Z(t)| = |zeta(1/2 + it)|.
Below t = 50 it is computed by Euler-Maclaurin summation; above, by the
Riemann-Siegel main sum plus the remainder series in powers of
tau^-1 = sqrt(2 pi / t), kept to the C_4 term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from ._workers import run_chunks
from .errors import DegenerateSampleError

TWO_PI = 2.0 * math.pi
RS_MIN_T = 50.0
MAX_T = 1.0e10
ZERO_SENTINEL = 1.0e-6
EM_TERMS = 20

EULER_MACLAURIN = "euler_maclaurin"
RIEMANN_SIEGEL = "riemann_siegel"


def rs_theta(t):
    """Riemann-Siegel theta by its asymptotic expansion (t >= 1)."""
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 1.0):
        raise ValueError("rs_theta needs t >= 1")
    out = 0.5 * tt * np.log(tt / TWO_PI) - 0.5 * tt - math.pi / 8 + 1.0 / (48.0 * tt) + 7.0 / (5760.0 * tt**3)
    return float(out) if out.ndim == 0 else out


def theta_loggamma(t):
    """theta(t) = Im log Gamma(1/4 + it/2) - (t/2) log pi, valid for all real t."""
    tt = np.asarray(t, dtype=float)
    out = special.loggamma(0.25 + 0.5j * tt).imag - 0.5 * tt * math.log(math.pi)
    return float(out) if out.ndim == 0 else out


# --- Riemann-Siegel remainder -------------------------------------------------
#
# With tau = sqrt(t / 2pi), N = floor(tau), p = tau - N the remainder is
#   (-1)^(N-1) tau^(-1/2) sum_k C_k(p) tau^(-k),
# where the C_k are combinations of derivatives of the entire function
#   Psi(p) = cos(2 pi (p^2 - p - 1/16)) / cos(2 pi p).
# Taylor coefficients of Psi about p = 1/2 come from a Cauchy integral on
# |p - 1/2| = 1 (FFT), and C_0..C_4 are assembled from them as polynomials
# in u = p - 1/2.

def _psi_taylor(n_coef=64, nodes=512, radius=1.0):
    phi = TWO_PI * np.arange(nodes) / nodes
    p = 0.5 + radius * np.exp(1j * phi)
    vals = np.cos(TWO_PI * (p * p - p - 1.0 / 16)) / np.cos(TWO_PI * p)
    a = (np.fft.fft(vals) / nodes).real / radius ** np.arange(nodes)
    return a[:n_coef]


def _derivative_poly(a, j):
    n = np.arange(j, a.size)
    falling = np.array([math.perm(int(k), j) for k in n], dtype=float)
    return a[j:] * falling


def _remainder_polys():
    a = _psi_taylor()
    pi2 = math.pi**2
    terms = [
        [(1.0, 0)],
        [(-1.0 / (96 * pi2), 3)],
        [(1.0 / (64 * pi2), 2), (1.0 / (18432 * pi2**2), 6)],
        [(-1.0 / (64 * pi2), 1), (-1.0 / (3840 * pi2**2), 5), (-1.0 / (5308416 * pi2**3), 9)],
        [
            (1.0 / (128 * pi2), 0),
            (19.0 / (24576 * pi2**2), 4),
            (11.0 / (5898240 * pi2**3), 8),
            (1.0 / (2038431744 * pi2**4), 12),
        ],
    ]
    polys = []
    for combo in terms:
        out = np.zeros(a.size)
        for weight, order in combo:
            d = _derivative_poly(a, order)
            out[: d.size] += weight * d
        # |u| <= 1/2 and the coefficients decay geometrically; 40 terms is plenty
        polys.append(out[:40])
    return polys


RS_REMAINDER_POLYS = _remainder_polys()


def _rs_z(t: np.ndarray, n_corrections: int = 5) -> np.ndarray:
    tau = np.sqrt(t / TWO_PI)
    N = np.floor(tau).astype(np.int64)
    frac = tau - N
    theta = rs_theta(t)
    out = np.empty_like(t)
    # rows are padded to the block's largest N and masked past their own N
    n_max = int(N.max())
    logn = np.log(np.arange(1, n_max + 1, dtype=float))
    rsqrt = 1.0 / np.sqrt(np.arange(1, n_max + 1, dtype=float))
    step = max(1, 2_000_000 // n_max)
    for lo in range(0, t.size, step):
        hi = min(t.size, lo + step)
        tb, thb, Nb = t[lo:hi], theta[lo:hi], N[lo:hi]
        width = int(Nb.max())
        phase = thb[:, None] - tb[:, None] * logn[None, :width]
        terms = np.cos(phase) * rsqrt[None, :width]
        terms[np.arange(width)[None, :] >= Nb[:, None]] = 0.0
        out[lo:hi] = 2.0 * terms.sum(axis=1)
    u = frac - 0.5
    rem = np.zeros_like(t)
    inv_tau = 1.0 / tau
    for k in range(n_corrections):
        rem += np.polynomial.polynomial.polyval(u, RS_REMAINDER_POLYS[k]) * inv_tau**k
    sign = np.where(N % 2 == 1, 1.0, -1.0)  # (-1)^(N-1)
    return out + sign * rem / np.sqrt(tau)


# --- Euler-Maclaurin -----------------------------------------------------------

_B2K = special.bernoulli(2 * EM_TERMS)[2::2]
_FACT2K = np.array([math.factorial(2 * k) for k in range(1, EM_TERMS + 1)], dtype=float)


def zeta_euler_maclaurin(s: complex, n_head: int | None = None) -> complex:
    """zeta(s) by Euler-Maclaurin summation with 20 Bernoulli corrections.

    The head length defaults to max(20, |Im s|/pi), which makes successive
    correction terms shrink by roughly a factor 4.
    """
    s = complex(s)
    if s == 1:
        raise ValueError("pole at s = 1")
    if n_head is None:
        n_head = max(20, int(abs(s.imag) / math.pi) + 1)
    N = n_head
    n = np.arange(1, N, dtype=float)
    head = np.sum(np.exp(-s * np.log(n)))
    logN = math.log(N)
    Ns = np.exp(-s * logN)  # N^-s
    total = head + N * Ns / (s - 1) + 0.5 * Ns
    rising = s  # s (s+1) ... (s+2k-2)
    power = Ns / N  # N^(-s-2k+1) at k = 1
    for k in range(1, EM_TERMS + 1):
        total += _B2K[k - 1] / _FACT2K[k - 1] * rising * power
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        power /= N * N
    return complex(total)


def z_euler_maclaurin(t: float) -> float:
    """Hardy's Z(t) from the Euler-Maclaurin zeta value and the exact theta."""
    val = np.exp(1j * theta_loggamma(t)) * zeta_euler_maclaurin(complex(0.5, t))
    return float(val.real)


# --- public evaluators ---------------------------------------------------------

def siegel_z(t):
    """Z(t) for scalar or array t in (0, 1e10]; method chosen per point."""
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt <= 0) or np.any(tt > MAX_T):
        raise ValueError("siegel_z needs 0 < t <= 1e10")
    out = np.empty_like(tt)
    low = tt < RS_MIN_T
    for i in np.flatnonzero(low):
        out[i] = z_euler_maclaurin(tt[i])
    if (~low).any():
        out[~low] = _rs_z(tt[~low])
    return float(out[0]) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class ZetaPoint:
    t: float
    Z: float
    log_abs_zeta: float
    method: str
    reliable: bool = True


def zeta_abs(t: float) -> ZetaPoint:
    """|zeta(1/2 + it)| through Z(t).

    ``reliable`` is False when |Z| < 1e-6 (numerically at a zero); the
    log value is then not meaningful and callers should drop the point.
    """
    t = float(t)
    z = siegel_z(t)
    method = EULER_MACLAURIN if t < RS_MIN_T else RIEMANN_SIEGEL
    reliable = abs(z) >= ZERO_SENTINEL
    log_abs = math.log(abs(z)) if z != 0 else -math.inf
    return ZetaPoint(t=t, Z=z, log_abs_zeta=log_abs, method=method, reliable=reliable)


def sign_change_zeros(a: float, b: float, step: float = 0.05, z_func=None, xtol: float = 1e-10):
    """Locate sign changes of Z on [a, b]: grid scan then Brent refinement."""
    z_func = z_func or siegel_z
    grid = np.arange(a, b + step / 2, step)
    vals = np.array([z_func(float(g)) for g in grid])
    zeros = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        zeros.append(optimize.brentq(lambda x: z_func(float(x)), grid[i], grid[i + 1], xtol=xtol))
    return zeros


def _rng(seed: int) -> np.random.Generator:
    # Philox is counter-based; the whole batch derives from one key
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass
class ZetaBatch:
    T: float
    seed: int
    t_values: np.ndarray
    values: np.ndarray  # log|zeta(1/2 + it)|
    Z: np.ndarray
    redraws: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.values.size)


def siegel_z_many(t: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """siegel_z over a large array, split into fixed chunks across workers."""
    parts = run_chunks(lambda lo, hi: siegel_z(t[lo:hi]), t.size, chunk)
    return np.concatenate(parts) if parts else np.zeros(0)


def sample_log_zeta(T: float, n: int, seed: int) -> ZetaBatch:
    """n values of log|zeta(1/2 + i tau)| with tau uniform on [T, 2T].

    Points where |Z| < 1e-6 are redrawn from the same stream; more than
    n/10 redraws raises ``DegenerateSampleError``.
    """
    if T < 1e3:
        raise ValueError("sample_log_zeta needs T >= 1e3")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = _rng(seed)
    t = T * (1.0 + rng.random(n))
    z = siegel_z_many(t)
    redraws = 0
    bad = np.flatnonzero(np.abs(z) < ZERO_SENTINEL)
    while bad.size:
        redraws += bad.size
        if redraws > n / 10:
            raise DegenerateSampleError(f"{redraws} near-zero redraws for n={n}")
        t[bad] = T * (1.0 + rng.random(bad.size))
        z[bad] = siegel_z(t[bad])
        bad = bad[np.abs(z[bad]) < ZERO_SENTINEL]
    return ZetaBatch(T=float(T), seed=int(seed), t_values=t, values=np.log(np.abs(z)), Z=z, redraws=redraws)
