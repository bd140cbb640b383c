"""Brute-force reference implementations shared by the tests.

Deliberately slow and independent of the library: plain loops, cmath,
trial division.  None is used for infinity.
"""

import cmath
import functools
import itertools
import math
import random


def naive_apply(m, x, p):
    a, b, c, d = m
    if x is None:
        return a * pow(c, -1, p) % p if c % p else None
    den = (c * x + d) % p
    if den == 0:
        return None
    return (a * x + b) * pow(den, -1, p) % p


def naive_orbit(m, u0, p, count):
    """[u_0, ..., u_{count-1}] by repeated application."""
    out, x = [], u0
    for _ in range(count):
        out.append(x)
        x = naive_apply(m, x, p)
    return out


def naive_period(m, u0, p):
    x = naive_apply(m, u0, p)
    t = 1
    while x != u0:
        x = naive_apply(m, x, p)
        t += 1
    return t


def ep(z, p):
    return cmath.exp(2j * math.pi * (z % p) / p)


@functools.cache
def is_prime(n):
    return n >= 2 and all(n % q for q in range(2, math.isqrt(n) + 1))


@functools.cache
def factorize(n):
    out, q = {}, 2
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@functools.cache
def mu(n):
    f = factorize(n)
    return 0 if any(e > 1 for e in f.values()) else (-1) ** len(f)


@functools.cache
def lam(n):
    f = factorize(n)
    return math.log(next(iter(f))) if len(f) == 1 else 0.0


def random_matrix(rng, p, allow_parabolic=False):
    while True:
        a, b, c, d = (rng.randrange(p) for _ in range(4))
        if (a * d - b * c) % p == 0:
            continue
        disc = ((a + d) ** 2 - 4 * (a * d - b * c)) % p
        if disc == 0 and not allow_parabolic:
            continue
        return a, b, c, d


def random_case(seed, primes=(101, 103, 107, 109, 113, 127, 211, 257, 401, 1009)):
    """(p, matrix, u0) with u0 possibly None (infinity)."""
    rng = random.Random(seed)
    p = rng.choice(primes)
    m = random_matrix(rng, p)
    u0 = None if rng.random() < 0.1 else rng.randrange(p)
    return p, m, u0


# -- exponential sums, term by term -------------------------------------------
# Each returns (value, terms, poles, mass); mass is the sum of |weights| kept.


class NaiveOrbit:
    """u_n by walking the map from u_0; memoizes the walk."""

    def __init__(self, p, m, u0):
        self.p, self.m = p, m
        self.seq = [u0]

    def __getitem__(self, n):
        while len(self.seq) <= n:
            self.seq.append(naive_apply(self.m, self.seq[-1], self.p))
        return self.seq[n]


def _acc(orbit, items, h):
    """items: (index or tuple of (index, coeff)), weight."""
    p = orbit.p
    val, terms, poles, mass = 0j, 0, 0, 0.0
    for idx, w in items:
        if w == 0:
            continue
        us = [orbit[idx]] if isinstance(idx, int) else [orbit[i] for i, _ in idx]
        if any(u is None for u in us):
            poles += 1
            continue
        z = h * us[0] if isinstance(idx, int) else sum(a * u for (_, a), u in zip(idx, us))
        val += w * ep(z, p)
        terms += 1
        mass += abs(w)
    return val, terms, poles, mass


def naive_single(orbit, h, k, K, N):
    return _acc(orbit, ((k * n, 1) for n in range(K, K + N)), h)


def naive_coprime(orbit, h, k, N, t):
    return _acc(orbit, ((k * n, 1) for n in range(1, N + 1) if math.gcd(n, t) == 1), h)


def naive_multi(orbit, coeffs, exps, K, N):
    return _acc(orbit, ((tuple((m * n, a) for a, m in zip(coeffs, exps) if a % orbit.p), 1)
                        for n in range(K, K + N)), 1)


def naive_prime(orbit, h, N):
    return _acc(orbit, ((n, 1) for n in range(2, N + 1) if is_prime(n)), h)


def naive_lambda(orbit, h, N, dyadic=False, t=None):
    rng = range(N, 2 * N) if dyadic else range(1, N + 1)
    return _acc(orbit, ((n, lam(n)) for n in rng if not dyadic or math.gcd(n, t) == 1), h)


def naive_mobius(orbit, h, N):
    return _acc(orbit, ((n, mu(n)) for n in range(1, N + 1)), h)


def naive_bilinear(orbit, h, alpha, beta):
    return _acc(orbit, ((k * m, a * b) for k, a in enumerate(alpha, 1)
                        for m, b in enumerate(beta, 1)), h)


def naive_multiple(orbit, h, k, ranges, coprime, t):
    axes = [[n for n in range(1, N + 1) if not coprime or math.gcd(n, t) == 1] for N in ranges]
    return _acc(orbit, ((k * math.prod(c), 1) for c in itertools.product(*axes)), h)
