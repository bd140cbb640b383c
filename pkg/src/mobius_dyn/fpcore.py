"""Exact arithmetic in F_p and F_{p^2}, factorization and 2x2 spectral classification.

Elements of F_p are plain Python ints in ``[0, p)``; the modulus travels
alongside them.  F_{p^2} is realised as F_p[w]/(w^2 - r) with ``r`` the
smallest quadratic nonresidue, so every run builds the same representation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError, UnsupportedError

#: Largest accepted modulus (exclusive).  Products of two residues stay below 2^124.
MAX_MODULUS = 1 << 62

TRIAL_DIVISION_LIMIT = 10**6

# Deterministic Miller-Rabin witnesses for n < 2^64.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for every ``n < 2**64``."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=None)
def check_modulus(p: int) -> int:
    """Validate ``p`` as an odd prime below :data:`MAX_MODULUS` and return it."""
    p = int(p)
    if p == 2:
        raise UnsupportedError("p = 2 is not supported (odd primes only)")
    if p >= MAX_MODULUS:
        raise UnsupportedError(f"modulus {p} exceeds the cap 2^62")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    return p


def fp_inv(x: int, p: int) -> int:
    x %= p
    if x == 0:
        raise DomainError("0 has no inverse in F_p")
    return pow(x, -1, p)


def legendre(x: int, p: int) -> int:
    """Euler criterion: 1 for nonzero squares, -1 for nonsquares, 0 for 0."""
    x %= p
    if x == 0:
        return 0
    return 1 if pow(x, (p - 1) // 2, p) == 1 else -1


@lru_cache(maxsize=None)
def find_nonresidue(p: int) -> int:
    """Smallest positive quadratic nonresidue modulo the odd prime ``p``."""
    check_modulus(p)
    r = 2
    while legendre(r, p) != -1:
        r += 1
    return r


def sqrt_mod(x: int, p: int) -> int:
    """A square root of a quadratic residue ``x`` mod ``p`` (Tonelli-Shanks)."""
    x %= p
    if x == 0:
        return 0
    if legendre(x, p) != 1:
        raise DomainError(f"{x} is not a square mod {p}")
    if p % 4 == 3:
        return pow(x, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = find_nonresidue(p)
    m, c, t, r = s, pow(z, q, p), pow(x, q, p), pow(x, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


# -- factorization -----------------------------------------------------------

@lru_cache(maxsize=1)
def _small_primes():
    limit = TRIAL_DIVISION_LIMIT
    sieve = bytearray([1]) * (limit + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, limit + 1, i)))
    return [i for i in range(limit + 1) if sieve[i]]


def _brent_rho(n: int) -> int:
    """Return a nontrivial factor of the odd composite ``n``."""
    for c in range(1, 200):
        y, m, g, r, q = 2, 128, 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
    raise RuntimeError(f"rho failed to split {n}")


def factorint(n: int) -> dict[int, int]:
    """Prime factorization ``{q: e}`` of ``n >= 1``.

    Trial division by primes up to 10^6, then Brent's rho on what remains.
    """
    n = int(n)
    if n < 1:
        raise DomainError("factorint needs n >= 1")
    out: dict[int, int] = {}
    for q in _small_primes():
        if q * q > n:
            break
        if n % q == 0:
            e = 0
            while n % q == 0:
                n //= q
                e += 1
            out[q] = e
    if n > 1:
        stack = [n]
        while stack:
            m = stack.pop()
            if is_prime(m):
                out[m] = out.get(m, 0) + 1
            else:
                f = _brent_rho(m)
                stack += [f, m // f]
    return dict(sorted(out.items()))


def divisors_of(factorization: dict[int, int]) -> list[int]:
    """All divisors, ascending, of the integer with the given factorization."""
    divs = [1]
    for q, e in factorization.items():
        divs = [d * q**i for d in divs for i in range(e + 1)]
    return sorted(divs)


# -- F_{p^2} ---------------------------------------------------------------

@dataclass(frozen=True)
class Fp2Element:
    """``c0 + c1*w`` with ``w^2 = r``, ``r`` the smallest nonresidue mod ``p``."""

    c0: int
    c1: int
    p: int

    @classmethod
    def of(cls, c0, c1=0, p=None):
        return cls(c0 % p, c1 % p, p)

    @property
    def r(self):
        return find_nonresidue(self.p)

    def _coerce(self, other):
        if isinstance(other, Fp2Element):
            if other.p != self.p:
                raise DomainError("mixing elements of different fields")
            return other
        if isinstance(other, int):
            return Fp2Element(other % self.p, 0, self.p)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.p
        return Fp2Element((self.c0 + other.c0) % p, (self.c1 + other.c1) % p, p)

    __radd__ = __add__

    def __neg__(self):
        p = self.p
        return Fp2Element(-self.c0 % p, -self.c1 % p, p)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        p = self.p
        a0, a1, b0, b1 = self.c0, self.c1, other.c0, other.c1
        return Fp2Element((a0 * b0 + self.r * a1 * b1) % p, (a0 * b1 + a1 * b0) % p, p)

    __rmul__ = __mul__

    def is_zero(self):
        return self.c0 == 0 and self.c1 == 0

    def is_one(self):
        return self.c0 == 1 and self.c1 == 0

    def in_base_field(self):
        return self.c1 == 0

    def conjugate(self):
        """Frobenius image ``x^p``; w^p = -w because r is a nonresidue."""
        return Fp2Element(self.c0, -self.c1 % self.p, self.p)

    def norm(self) -> int:
        p = self.p
        return (self.c0 * self.c0 - self.r * self.c1 * self.c1) % p

    def inverse(self):
        nrm = self.norm()
        if nrm == 0:
            raise DomainError("0 has no inverse in F_{p^2}")
        inv = pow(nrm, -1, self.p)
        return Fp2Element(self.c0 * inv % self.p, -self.c1 * inv % self.p, self.p)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result = Fp2Element(1, 0, self.p)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __repr__(self):
        if self.c1 == 0:
            return f"{self.c0}"
        return f"({self.c0} + {self.c1}w)"


def fp2_sqrt(x: int, p: int) -> Fp2Element:
    """Square root in F_{p^2} of a base-field element."""
    x %= p
    if legendre(x, p) >= 0:
        return Fp2Element(sqrt_mod(x, p), 0, p)
    # x = r * s^2 for some s in F_p, so sqrt(x) = s * w
    s = sqrt_mod(x * fp_inv(find_nonresidue(p), p), p)
    return Fp2Element(0, s, p)


def fp2_order(x: Fp2Element, factorization: dict[int, int]) -> int:
    """Multiplicative order of ``x`` given a factorization of a multiple of it.

    ``factorization`` maps primes to exponents; their product must be a
    multiple of the order of ``x`` (typically p - 1, p + 1 or p^2 - 1).
    """
    if x.is_zero():
        raise DomainError("0 has no multiplicative order")
    n = 1
    for q, e in factorization.items():
        if not is_prime(q) or e < 0:
            raise DomainError(f"factorization entry {q}^{e} is not a prime power")
        n *= q**e
    if not (x**n).is_one():
        raise DomainError("supplied factorization does not cover the element order")
    for q in factorization:
        while n % q == 0 and (x ** (n // q)).is_one():
            n //= q
    return n


# -- 2x2 spectral classification -------------------------------------------

SPLIT, NONSPLIT, PARABOLIC = "split", "nonsplit", "parabolic"


@dataclass(frozen=True)
class SpectralData:
    kind: str
    eigenvalues: tuple
    ratio: Fp2Element | None
    discriminant: int
    trace: int
    det: int

    @property
    def distinct_roots(self):
        return self.kind != PARABOLIC


def classify(a: int, b: int, c: int, d: int, p: int) -> SpectralData:
    """Roots of X^2 - tr X + det in F_{p^2} and the split/nonsplit/parabolic kind."""
    check_modulus(p)
    a, b, c, d = a % p, b % p, c % p, d % p
    det = (a * d - b * c) % p
    if det == 0:
        raise DomainError("singular matrix")
    tr = (a + d) % p
    disc = (tr * tr - 4 * det) % p
    root = fp2_sqrt(disc, p)
    half = fp_inv(2, p)
    lam1 = (root + tr) * half
    lam2 = (Fp2Element(tr, 0, p) - root) * half
    if disc == 0:
        return SpectralData(PARABOLIC, (lam1, lam2), None, disc, tr, det)
    kind = SPLIT if legendre(disc, p) == 1 else NONSPLIT
    return SpectralData(kind, (lam1, lam2), lam1 / lam2, disc, tr, det)
