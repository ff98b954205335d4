"""Exact and empirical moments of the prime Dirichlet polynomial.

The k-th moment over [T, 2T] is, up to off-diagonal terms that vanish as
T grows, k! times the coefficient of z^k in prod_{p<=x} I0(z/sqrt(p)).
That coefficient is read off a truncated power-series product (the primary
route); ``contour_moment`` gets the same number from a trapezoid rule on a
circle and exists only as a cross-check.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .dirpoly import SampleBatch
from .numkit import TruncatedSeries, bessel_I0, inverse_factorial_squared
from .primes import PrimeTable

DEFAULT_MIN_DEGREE = 80
MAX_ORDER = 200
MAX_COSINE_FACTORS = 8

# --- cosine products ----------------------------------------------------------

# 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights; the
# odd-indexed nodes are the 7-point Gauss nodes.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_WEIGHTS_FULL = np.zeros(15)
_G_WEIGHTS_FULL[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

QUADRATURE_NODE_BUDGET = 30_000_000
_PANEL_CHUNK = 200_000


def gauss_kronrod_panels(f, left: np.ndarray, right: np.ndarray):
    """15-point Kronrod estimate and |Kronrod - Gauss| error for each panel."""
    c = 0.5 * (left + right)
    h = 0.5 * (right - left)
    vals = f(c[:, None] + h[:, None] * GK_NODES[None, :])
    k = h * (vals @ GK_WEIGHTS)
    g = h * (vals @ _G_WEIGHTS_FULL)
    return k, np.abs(k - g)


def _cos_product(logs):
    def f(t):
        out = np.ones_like(t)
        for lg in logs:
            out *= np.cos(t * lg)
        return out

    return f


def _mean_by_quadrature(logs, T, tol):
    k = len(logs)
    width = math.pi / (4 * k * max(logs))
    n_panels = int(math.ceil(T / width))
    f = _cos_product(logs)
    edges_total = 0.0
    pending = []
    for lo in range(0, n_panels, _PANEL_CHUNK):
        hi = min(n_panels, lo + _PANEL_CHUNK)
        left = T + T * np.arange(lo, hi) / n_panels
        right = T + T * np.arange(lo + 1, hi + 1) / n_panels
        est, err = gauss_kronrod_panels(f, left, right)
        # per-panel share of the absolute budget tol * T on the integral
        bad = err > tol * (right - left)
        edges_total += est[~bad].sum()
        if bad.any():
            pending.append((left[bad], right[bad]))
    for _ in range(30):
        if not pending:
            break
        nxt = []
        for left, right in pending:
            mid = 0.5 * (left + right)
            left2 = np.concatenate([left, mid])
            right2 = np.concatenate([mid, right])
            est, err = gauss_kronrod_panels(f, left2, right2)
            bad = err > tol * (right2 - left2)
            edges_total += est[~bad].sum()
            if bad.any():
                nxt.append((left2[bad], right2[bad]))
        pending = nxt
    if pending:
        # accept what remains; adaptive refinement has hit its depth limit
        for left, right in pending:
            edges_total += gauss_kronrod_panels(f, left, right)[0].sum()
    return edges_total / T


def _mean_by_expansion(logs, T):
    # prod cos(a_l t) = 2^-k sum over sign vectors of cos((sum e_l a_l) t),
    # and (1/T) int_T^2T cos(w t) dt = cos(1.5 w T) sinc(w T / 2pi)
    a = np.asarray(logs)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=a.size)))
    omega = signs @ a
    means = np.cos(1.5 * omega * T) * np.sinc(omega * T / (2 * math.pi))
    return float(means.sum() / signs.shape[0])


def cosine_product_integral(primes, T: float, method: str = "auto", tol: float = 1e-6) -> float:
    """(1/T) * integral over [T, 2T] of prod_l cos(t log p_l).

    ``method="quadrature"`` runs adaptive Gauss-Kronrod on panels no wider
    than pi / (4 k log max p).  ``method="expansion"`` expands the product
    into 2^k cosines and integrates each in closed form; "auto" uses the
    quadrature while it fits in a fixed node budget.

    Refuses inputs with T < 1e4 * (max p)^k, where the off-diagonal terms
    would be comparable to the diagonal value.
    """
    primes = [int(p) for p in primes]
    k = len(primes)
    if k == 0:
        return 1.0
    if k > MAX_COSINE_FACTORS:
        raise ValueError(f"at most {MAX_COSINE_FACTORS} factors supported")
    if min(primes) < 2:
        raise ValueError("factors must be primes >= 2")
    if T < 1e4 * max(primes) ** k:
        raise ValueError(f"T={T:g} below 1e4 * (max p)^k = {1e4 * max(primes) ** k:g}")
    logs = [math.log(p) for p in primes]
    if method == "auto":
        nodes = 15 * T * 4 * k * max(logs) / math.pi
        method = "quadrature" if nodes <= QUADRATURE_NODE_BUDGET else "expansion"
    if method == "quadrature":
        return _mean_by_quadrature(logs, float(T), tol)
    if method == "expansion":
        return _mean_by_expansion(logs, float(T))
    raise ValueError(f"unknown method {method!r}")


# --- exact moments ---------------------------------------------------------------

def _convolve_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m = a.shape[1]
    out = np.zeros_like(a)
    for j in range(m):
        out[:, j:] += a[:, j : j + 1] * b[:, : m - j]
    return out


def _tree_product(rows: np.ndarray) -> np.ndarray:
    while rows.shape[0] > 1:
        if rows.shape[0] % 2:
            ident = np.zeros((1, rows.shape[1]))
            ident[0, 0] = 1.0
            rows = np.vstack([rows, ident])
        rows = _convolve_rows(rows[0::2], rows[1::2])
    return rows[0]


@lru_cache(maxsize=32)
def euler_bessel_series(table: PrimeTable, degree: int) -> TruncatedSeries:
    """prod_{p<=x} I0(z/sqrt(p)) as a series in z truncated at ``degree``.

    Works in u = z^2 (odd coefficients vanish) and multiplies the per-prime
    factors in a balanced tree, chunk by chunk, so the rounding pattern is
    fixed.
    """
    m = degree // 2
    n = np.arange(m + 1)
    recip = 1.0 / table.primes.astype(float)
    inv_fact_sq = inverse_factorial_squared(m)
    partials = []
    for lo in range(0, recip.size, 1 << 15):
        r = recip[lo : lo + (1 << 15)]
        rows = inv_fact_sq[None, :] * (0.25 * r[:, None]) ** n[None, :]
        partials.append(_tree_product(rows))
    even = _tree_product(np.array(partials)) if partials else np.eye(1, m + 1)[0]
    coeffs = np.zeros(degree + 1)
    coeffs[0::2] = even
    return TruncatedSeries(coeffs)


def _k_factorial_times(k: int, c: float) -> float:
    if c == 0.0:
        return 0.0
    if k <= 170:
        return float(math.factorial(k)) * c
    return math.copysign(math.exp(math.lgamma(k + 1) + math.log(abs(c))), c)


def exact_moment(table: PrimeTable, k: int, degree: int | None = None) -> float:
    """k! [z^k] prod_{p<=x} I0(z/sqrt(p)); zero for odd k."""
    if k < 0 or k > MAX_ORDER:
        raise ValueError(f"moment order {k} outside 0..{MAX_ORDER}")
    degree = max(2 * k, DEFAULT_MIN_DEGREE) if degree is None else degree
    if k > degree:
        raise ValueError(f"order {k} above truncation degree {degree}")
    if k % 2:
        return 0.0
    return _k_factorial_times(k, euler_bessel_series(table, degree).coefficient(k))


def exact_moments(table: PrimeTable, k_max: int, degree: int | None = None) -> np.ndarray:
    degree = max(2 * k_max, DEFAULT_MIN_DEGREE) if degree is None else degree
    if k_max > degree:
        raise ValueError(f"order {k_max} above truncation degree {degree}")
    series = euler_bessel_series(table, degree)
    return np.array([_k_factorial_times(k, series[k]) if k % 2 == 0 else 0.0 for k in range(k_max + 1)])


def bessel_product(table: PrimeTable, w) -> np.ndarray:
    """prod_{p<=x} I0(w/sqrt(p)) evaluated directly at complex points w."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    out = np.ones_like(w)
    step = max(1, (1 << 20) // max(w.size, 1))
    for lo in range(0, len(table), step):
        a = table.inv_sqrt[lo : lo + step]
        out *= np.prod(bessel_I0(w[:, None] * a[None, :]), axis=1)
    return out


def contour_moment(table: PrimeTable, k: int, radius: float = 2.0, nodes: int = 4096) -> float:
    """k!/(2 pi i) * contour integral of prod I0(w/sqrt(p)) / w^(k+1) on |w| = radius.

    Trapezoid rule on equispaced nodes; exponentially accurate for this
    periodic analytic integrand.
    """
    j = np.arange(nodes)
    w = radius * np.exp(2j * math.pi * j / nodes)
    # w^-k from the reduced node index, so the phase carries no k-fold rounding
    phase = np.exp(-2j * math.pi * ((k * j) % nodes) / nodes)
    vals = bessel_product(table, w) * phase * float(radius) ** (-k)
    coef = float(np.mean(vals).real)
    return _k_factorial_times(k, coef)


# --- empirical moments -------------------------------------------------------------

def empirical_moment(batch: SampleBatch, k: int, restrict_A: bool = False) -> tuple[float, float]:
    """Sample mean of value^k and its Monte Carlo standard error.

    With ``restrict_A`` the mean is taken over the samples in A only.
    """
    if k < 0 or k > 50:
        raise ValueError("empirical moments supported for 0 <= k <= 50")
    v = batch.values[batch.in_A] if restrict_A else batch.values
    if v.size == 0:
        raise ValueError("no samples in the requested restriction")
    pk = v**k
    mean = float(pk.mean())
    se = float(pk.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return mean, se


@dataclass
class MomentTable:
    x: int
    exact: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray

    @property
    def k_max(self) -> int:
        return self.exact.size - 1

    @property
    def orders(self) -> range:
        return range(self.exact.size)

    def rows(self):
        for k in self.orders:
            yield k, float(self.exact[k]), float(self.empirical[k]), float(self.stderr[k])

    def to_csv(self, path, comment: str | None = None) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["k", "exact", "empirical", "stderr"])
            for k, e, m, s in self.rows():
                w.writerow([k, repr(e), repr(m), repr(s)])
        return path


def moment_table(table: PrimeTable, k_max: int, batch: SampleBatch | None = None, restrict_A: bool = False) -> MomentTable:
    exact = exact_moments(table, k_max)
    emp = np.full(k_max + 1, np.nan)
    se = np.full(k_max + 1, np.nan)
    if batch is not None:
        for k in range(k_max + 1):
            emp[k], se[k] = empirical_moment(batch, k, restrict_A)
    return MomentTable(x=table.x_limit, exact=exact, empirical=emp, stderr=se)


def mgf_from_moments(mt: MomentTable, z: complex, cutoff: int) -> complex:
    """sum_{k<=cutoff} z^k/k! * exact moment k; the truncated MGF."""
    if cutoff > mt.k_max:
        raise ValueError(f"cutoff {cutoff} above table order {mt.k_max}")
    if abs(z) > 1:
        raise ValueError("mgf_from_moments needs |z| <= 1")
    total = 0j
    zk = 1 + 0j
    for k in range(cutoff + 1):
        if mt.exact[k] != 0.0:
            inv_fact = 1.0 / math.factorial(k) if k <= 170 else math.exp(-math.lgamma(k + 1))
            total += zk * (mt.exact[k] * inv_fact)
        zk *= z
    return complex(total)
