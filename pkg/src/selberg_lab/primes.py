"""Prime tables, the variance scale sigma(x)^2 and the multiplicative f."""
from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np

SEGMENT_SIZE = 1 << 20
MAX_SIEVE = 10**10
MAX_TOTAL_EXPONENT = 60

CACHE_MAGIC = b"SLPT"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        y = pow(a, d, n)
        if y in (1, n - 1):
            continue
        for _ in range(r - 1):
            y = y * y % n
            if y == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True, eq=False)
class PrimeTable:
    x_limit: int
    primes: np.ndarray
    inv_sqrt: np.ndarray
    log_p: np.ndarray
    sum_recip: float
    sum_recip_sq: float

    @classmethod
    def from_primes(cls, x_limit: int, primes) -> "PrimeTable":
        p = np.asarray(primes, dtype=np.int64)
        pf = p.astype(float)
        arrays = (p, 1.0 / np.sqrt(pf), np.log(pf))
        for a in arrays:
            a.flags.writeable = False
        return cls(
            x_limit=int(x_limit),
            primes=arrays[0],
            inv_sqrt=arrays[1],
            log_p=arrays[2],
            sum_recip=math.fsum(1.0 / pf),
            sum_recip_sq=math.fsum(1.0 / (pf * pf)),
        )

    def __len__(self):
        return int(self.primes.size)

    @property
    def recip(self) -> np.ndarray:
        return 1.0 / self.primes.astype(float)


def _small_primes(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).astype(np.int64)


def iter_prime_segments(x: int, segment: int = SEGMENT_SIZE):
    """Yield arrays of the primes <= x, one sieve segment at a time."""
    root = math.isqrt(x)
    base = _small_primes(root)
    yield base
    lo = root + 1
    while lo <= x:
        hi = min(lo + segment, x + 1)
        flags = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            start = max(p * p, (lo + p - 1) // p * p)
            if start >= hi:
                continue
            flags[start - lo :: p] = False
        yield np.flatnonzero(flags).astype(np.int64) + lo
        lo = hi


def sieve(x: int, segment: int = SEGMENT_SIZE) -> PrimeTable:
    """All primes <= x by a segmented sieve of Eratosthenes.

    Working memory is O(sqrt(x) + segment) apart from the output itself.
    """
    x = int(x)
    if x < 2:
        raise ValueError(f"sieve({x}): no primes below 2 (empty table)")
    if x > MAX_SIEVE:
        raise ValueError(f"sieve({x}): above supported limit {MAX_SIEVE}")
    parts = list(iter_prime_segments(x, segment))
    return PrimeTable.from_primes(x, np.concatenate(parts))


@lru_cache(maxsize=16)
def table_for(x: int) -> PrimeTable:
    """Memoised ``sieve``; tables are immutable so sharing is safe."""
    return sieve(x)


def sigma_sq(table: PrimeTable) -> float:
    """sigma(x)^2 = (1/2) * sum_{p <= x} 1/p."""
    if len(table) == 0:
        raise ValueError("sigma_sq of an empty prime table")
    return 0.5 * table.sum_recip


def multiplicative_f(factorization: Iterable[tuple[int, int]]) -> Fraction:
    """f(n) = prod_p 2^-a * binom(a, a/2), zero when any exponent a is odd.

    ``factorization`` lists (prime, exponent) pairs; repeated primes are merged.
    """
    exps: Counter = Counter()
    for p, a in factorization:
        p, a = int(p), int(a)
        if a < 0:
            raise ValueError(f"negative exponent {a} for {p}")
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        exps[p] += a
    if sum(exps.values()) > MAX_TOTAL_EXPONENT:
        raise ValueError(f"total exponent above {MAX_TOTAL_EXPONENT} not supported")
    out = Fraction(1)
    for a in exps.values():
        if a % 2:
            return Fraction(0)
        out *= Fraction(math.comb(a, a // 2), 2**a)
    return out


def write_cache(table: PrimeTable, path) -> Path:
    """Binary cache: b"SLPT", u32 version, u64 x_limit, u64 count, u32 gaps."""
    path = Path(path)
    gaps = np.diff(table.primes, prepend=0)
    if gaps.size and gaps.max() >= 2**32:
        raise ValueError("prime gap does not fit in u32")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.x_limit, len(table)))
        fh.write(gaps.astype("<u4").tobytes())
    return path


def read_cache(path) -> PrimeTable:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("prime cache truncated")
    magic, version, x_limit, count = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise ValueError(f"bad prime cache magic {magic!r}")
    if version != CACHE_VERSION:
        raise ValueError(f"unsupported prime cache version {version}")
    gaps = np.frombuffer(data, dtype="<u4", offset=_HEADER.size)
    if gaps.size != count:
        raise ValueError(f"prime cache count {count} but {gaps.size} gaps stored")
    return PrimeTable.from_primes(x_limit, np.cumsum(gaps.astype(np.int64)))
