"""Classical arithmetic functions, exact log-combinations and prime sieving."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from .errors import DomainError
from .fpcore import divisors_of, factorint

SEGMENT = 1 << 18

#: Integers up to this bound are factored through a smallest-prime-factor table.
SPF_LIMIT = 10**8


class LogVector:
    """Exact integer combination sum_q e_q log q over primes q.

    Zero coefficients are never stored, so equality is plain dict equality.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[int, int] | None = None):
        self._c = {q: e for q, e in (coeffs or {}).items() if e}

    @classmethod
    def log_of(cls, n: "int | FactoredInt") -> "LogVector":
        """log n as the vector of its prime exponents."""
        f = n if isinstance(n, FactoredInt) else factor(n)
        return cls(dict(f.factors))

    def items(self):
        return self._c.items()

    def as_dict(self):
        return dict(sorted(self._c.items()))

    def __bool__(self):
        return bool(self._c)

    def __eq__(self, other):
        if isinstance(other, LogVector):
            return self._c == other._c
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def __add__(self, other):
        out = dict(self._c)
        for q, e in other._c.items():
            out[q] = out.get(q, 0) + e
        return LogVector(out)

    def __neg__(self):
        return LogVector({q: -e for q, e in self._c.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k: int):
        return LogVector({q: k * e for q, e in self._c.items()}) if k else LogVector()

    __rmul__ = __mul__

    def value(self) -> float:
        return math.fsum(e * math.log(q) for q, e in self._c.items())

    def __float__(self):
        return self.value()

    def __repr__(self):
        return f"LogVector({self.as_dict()})"


@dataclass(frozen=True)
class FactoredInt:
    n: int
    factors: tuple  # ((q, e), ...) ascending

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("FactoredInt needs n >= 1")
        prod = 1
        for q, e in self.factors:
            prod *= q**e
        if prod != self.n:
            raise DomainError(f"factorization {self.factors} does not multiply to {self.n}")

    @property
    def as_dict(self):
        return dict(self.factors)


@lru_cache(maxsize=4)
def spf_table(limit: int) -> np.ndarray:
    """Smallest prime factor of every n <= limit (spf[0] = 0, spf[1] = 1)."""
    if limit > SPF_LIMIT:
        raise DomainError(f"spf table limit {limit} above {SPF_LIMIT}")
    spf = np.zeros(limit + 1, dtype=np.int32 if limit < 2**31 else np.int64)
    if limit >= 1:
        spf[1] = 1
    for q in range(2, math.isqrt(limit) + 1):
        if spf[q] == 0:
            block = spf[q * q::q]
            block[block == 0] = q
    rest = np.flatnonzero(spf == 0)
    spf[rest[rest >= 2]] = rest[rest >= 2]
    spf.flags.writeable = False
    return spf


_spf_cache_limit = 1 << 16


def factor(n: int) -> FactoredInt:
    """Factor ``n`` once; small n go through the shared spf table."""
    n = int(n)
    if n < 1:
        raise DomainError("factor needs n >= 1")
    if n <= _spf_cache_limit:
        spf = spf_table(_spf_cache_limit)
        out: dict[int, int] = {}
        m = n
        while m > 1:
            q = int(spf[m])
            out[q] = out.get(q, 0) + 1
            m //= q
        return FactoredInt(n, tuple(sorted(out.items())))
    return FactoredInt(n, tuple(factorint(n).items()))


def _f(n) -> FactoredInt:
    return n if isinstance(n, FactoredInt) else factor(n)


def mobius_mu(n) -> int:
    f = _f(n)
    if any(e > 1 for _, e in f.factors):
        return 0
    return -1 if len(f.factors) % 2 else 1


def von_mangoldt(n) -> LogVector:
    f = _f(n)
    if len(f.factors) == 1:
        return LogVector({f.factors[0][0]: 1})
    return LogVector()


def euler_phi(n) -> int:
    out = 1
    for q, e in _f(n).factors:
        out *= (q - 1) * q ** (e - 1)
    return out


def divisor_tau(n) -> int:
    return math.prod(e + 1 for _, e in _f(n).factors)


def divisors(n) -> list[int]:
    return divisors_of(_f(n).as_dict)


def squarefree_divisors(n) -> list[tuple[int, int]]:
    """Pairs (d, mu(d)) for the squarefree divisors d of n, ascending in d."""
    out = [(1, 1)]
    for q, _ in _f(n).factors:
        out += [(d * q, -m) for d, m in out]
    return sorted(out)


def coprime_count(N: int, t) -> int:
    """#{1 <= n <= N : gcd(n, t) = 1} by inclusion-exclusion over d | t."""
    if N <= 0:
        return 0
    return sum(m * (N // d) for d, m in squarefree_divisors(t))


# -- sieving ---------------------------------------------------------------

@lru_cache(maxsize=8)
def _base_primes(limit: int) -> np.ndarray:
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for q in range(2, math.isqrt(limit) + 1):
        if flags[q]:
            flags[q * q::q] = False
    return np.flatnonzero(flags).astype(np.int64)


def iter_prime_segments(N: int, segment: int = SEGMENT) -> Iterator[np.ndarray]:
    """Primes <= N in ascending segments; memory is O(sqrt N + segment)."""
    if N < 2:
        return
    base = _base_primes(math.isqrt(N))
    lo = 2
    while lo <= N:
        hi = min(lo + segment, N + 1)
        flags = np.ones(hi - lo, dtype=bool)
        for q in base:
            q = int(q)
            if q * q >= hi:
                break
            start = max(q * q, -(-lo // q) * q)
            flags[start - lo::q] = False
        yield np.flatnonzero(flags).astype(np.int64) + lo
        lo = hi


def sieve_primes(N: int) -> np.ndarray:
    parts = list(iter_prime_segments(N))
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def prime_count(N: int) -> int:
    return sum(len(s) for s in iter_prime_segments(N))


def prime_power_bases(lo: int, hi: int) -> np.ndarray:
    """For n in [lo, hi): q if n = q^a (a >= 1, q prime) else 0."""
    lo = max(lo, 0)
    out = np.zeros(max(hi - lo, 0), dtype=np.int64)
    if hi <= 2:
        return out
    for q in sieve_primes(hi - 1).tolist():
        qa = q
        while qa < hi:
            if qa >= lo:
                out[qa - lo] = q
            qa *= q
    return out


def lambda_weights(lo: int, hi: int) -> np.ndarray:
    """Lambda(n) in double precision for n in [lo, hi)."""
    q = prime_power_bases(lo, hi)
    out = np.zeros(len(q), dtype=np.float64)
    nz = q > 0
    out[nz] = np.log(q[nz].astype(np.float64))
    return out


def mobius_range(N: int) -> np.ndarray:
    """mu(n) for 0 <= n <= N as int8 (mu(0) set to 0)."""
    mu = np.ones(N + 1, dtype=np.int8)
    if N >= 0:
        mu[0] = 0
    for q in sieve_primes(N).tolist():
        mu[q::q] *= -1
        if q * q <= N:
            mu[q * q::q * q] = 0
    return mu
