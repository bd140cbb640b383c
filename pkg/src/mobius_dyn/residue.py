"""Products in residue classes modulo t and Dirichlet characters.

Counts are exact: per-range residue histograms are combined by
multiplicative convolution mod t in integer arithmetic.  The character
route expands the same counts through orthogonality over all phi(t)
characters and is only exact up to roundoff.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property

import numpy as np

from .arith import coprime_count, euler_phi, factor
from .errors import BudgetExceededError, DomainError
from .fpcore import factorint
from .rng import SplitMix64

DEFAULT_WORK_BUDGET = 10**9
CHARACTER_TABLE_LIMIT = 10**5
_INT64_SAFE = 1 << 62


def residue_histogram(t: int, N: int, coprime: bool = False) -> np.ndarray:
    """h[x] = #{1 <= n <= N : n = x mod t}, optionally only gcd(n, t) = 1."""
    h = np.full(t, max(N, 0) // t, dtype=np.int64)
    r = max(N, 0) % t
    h[1:r + 1] += 1
    if coprime and t > 1:
        h[np.gcd(np.arange(t), t) != 1] = 0
    return h


def product_histogram(t: int, ranges, coprime: bool = False,
                      budget: int = DEFAULT_WORK_BUDGET) -> np.ndarray:
    """H[x] = number of tuples 1 <= n_i <= N_i with n_1...n_nu = x mod t."""
    ranges = [int(N) for N in ranges]
    if not ranges:
        raise DomainError("need at least one range")
    if t < 1:
        raise DomainError("modulus t must be >= 1")
    work = sum(t * min(max(N, 1), t) for N in ranges[1:]) + t
    if work > budget:
        raise BudgetExceededError("product histogram", work, budget)
    big = math.prod(max(N, 0) for N in ranges) >= _INT64_SAFE
    acc = residue_histogram(t, ranges[0], coprime)
    if big:
        acc = acc.astype(object)
    for N in ranges[1:]:
        b = residue_histogram(t, N, coprime)
        xs = np.flatnonzero(acc)
        ax = acc[xs]
        new = np.zeros(t, dtype=acc.dtype)
        for y in np.flatnonzero(b).tolist():
            np.add.at(new, (xs * y) % t, ax * b[y])
        acc = new
    return acc


def rt_count(t: int, ranges, n: int, coprime: bool = False,
             budget: int = DEFAULT_WORK_BUDGET) -> int:
    """Number of tuples with n_1...n_nu = n (mod t); ``coprime`` keeps gcd(n_i, t) = 1 only."""
    return int(product_histogram(t, ranges, coprime, budget)[n % t])


def rt_main_term(t: int, ranges) -> Fraction:
    """Expected count prod N_i^* / phi(t) over unit classes."""
    num = math.prod(coprime_count(N, t) for N in ranges)
    return Fraction(num, euler_phi(t))


def _primitive_root(q: int, e: int) -> int:
    """A generator of (Z/q^e)^* for an odd prime q."""
    qs = list(factorint(q - 1))
    g = 2
    while any(pow(g, (q - 1) // r, q) == 1 for r in qs):
        g += 1
    if e > 1 and pow(g, q - 1, q * q) == 1:
        g += q
    return g


class CharacterTable:
    """All phi(t) Dirichlet characters modulo t.

    (Z/t)^* is split by CRT into cyclic factors: one per odd prime power
    (primitive root), and {+-1} x <5> for powers of two.  A character is an
    exponent vector a with chi(x) = exp(2 pi i sum_j a_j log_j(x) / ord_j);
    index 0 is the principal character.  Values are kept as exponents k
    modulo L = lcm(orders) and only turned into complex numbers on demand.
    """

    def __init__(self, t: int, limit: int = CHARACTER_TABLE_LIMIT):
        if t < 1:
            raise DomainError("modulus t must be >= 1")
        if t > limit:
            raise BudgetExceededError("character table", t, limit)
        self.t = t
        self.phi = euler_phi(t)
        orders, logs = [], []
        xs = np.arange(t, dtype=np.int64)
        for q, e in factor(t).factors:
            qe = q**e
            r = xs % qe
            if q == 2:
                if e == 1:
                    continue
                # x = (-1)^s 5^k mod 2^e
                sign = np.full(qe, -1, dtype=np.int64)
                k5 = np.full(qe, -1, dtype=np.int64)
                y = 1
                for k in range(max(qe // 4, 1)):
                    sign[y], k5[y] = 0, k
                    sign[qe - y], k5[qe - y] = 1, k
                    y = y * 5 % qe
                orders.append(2)
                logs.append(sign[r])
                if e >= 3:
                    orders.append(qe // 4)
                    logs.append(k5[r])
            else:
                g = _primitive_root(q, e)
                order = qe - qe // q
                dl = np.full(qe, -1, dtype=np.int64)
                y = 1
                for k in range(order):
                    dl[y] = k
                    y = y * g % qe
                orders.append(order)
                logs.append(dl[r])
        self.orders = orders
        self.L = math.lcm(*orders) if orders else 1
        if logs:
            self._logs = np.vstack(logs)
        else:
            self._logs = np.zeros((0, t), dtype=np.int64)
        self.units = np.gcd(xs, t) == 1
        self._logs[:, ~self.units] = 0

    def __len__(self):
        return self.phi

    def exponent_vector(self, index: int) -> list[int]:
        if not 0 <= index < self.phi:
            raise DomainError(f"character index {index} out of range")
        vec = []
        for order in self.orders:
            index, a = divmod(index, order)
            vec.append(a)
        return vec

    def _weights(self, vec):
        return np.array([a * (self.L // o) for a, o in zip(vec, self.orders)], dtype=np.int64)

    def exponents(self, index: int, xs=None) -> np.ndarray:
        """k(x) with chi(x) = exp(2 pi i k(x) / L); meaningless off the units."""
        logs = self._logs if xs is None else self._logs[:, np.asarray(xs) % self.t]
        return (self._weights(self.exponent_vector(index)) @ logs) % self.L

    def values(self, index: int, xs=None) -> np.ndarray:
        xs = np.arange(self.t) if xs is None else np.asarray(xs, dtype=np.int64)
        k = self.exponents(index, xs)
        out = np.exp(2j * np.pi * k / self.L)
        out[~self.units[xs % self.t]] = 0
        return out

    def value(self, index: int, x: int) -> complex:
        return complex(self.values(index, [x])[0])

    def order_of(self, index: int) -> int:
        vec = self.exponent_vector(index)
        return math.lcm(*[o // math.gcd(a, o) for a, o in zip(vec, self.orders)]) if vec else 1

    def quadratic_characters(self) -> list[int]:
        return [i for i in range(self.phi) if self.order_of(i) == 2]

    @cached_property
    def _all_weights(self) -> np.ndarray:
        """(phi, r) matrix of per-factor exponent weights for every character."""
        W = np.zeros((self.phi, len(self.orders)), dtype=np.int64)
        idx = np.arange(self.phi, dtype=np.int64)
        for j, order in enumerate(self.orders):
            idx, a = np.divmod(idx, order)
            W[:, j] = a * (self.L // order)
        return W

    def value_matrix(self, xs, chars=None) -> np.ndarray:
        """chi(x) for chi in ``chars`` (rows, default all) and x in ``xs`` (columns)."""
        xs = np.asarray(xs, dtype=np.int64) % self.t
        W = self._all_weights if chars is None else self._all_weights[chars]
        k = (W @ self._logs[:, xs]) % self.L
        out = np.exp(2j * np.pi * k / self.L)
        out[:, ~self.units[xs]] = 0
        return out

    def orthogonality_error(self) -> float:
        """max |sum_x chi(x) conj(chi'(x)) - phi [chi = chi']| over all pairs."""
        V = self.value_matrix(np.arange(self.t))
        G = V @ V.conj().T
        return float(np.max(np.abs(G - self.phi * np.eye(self.phi))))

    def partial_sums(self, N: int, chars=None) -> np.ndarray:
        """sum_{1 <= x <= N} chi(x) for each character (periodic in t)."""
        q, r = divmod(max(N, 0), self.t)
        n = self.phi if chars is None else len(chars)
        out = np.zeros(n, dtype=np.complex128)
        if r:
            out += self.value_matrix(np.arange(1, r + 1), chars).sum(axis=1)
        if q:
            full = np.zeros(n, dtype=np.complex128)
            ids = np.arange(self.phi) if chars is None else np.asarray(chars)
            full[ids == 0] = self.phi
            out += q * full
        return out


def char_partial_sum(table: CharacterTable, index: int, N: int) -> complex:
    return complex(table.partial_sums(N, [index])[0])


def burgess_ratio(table: CharacterTable, index: int, N: int) -> float:
    """|sum_{x <= N} chi(x)| / N, the empirical saving over the trivial bound."""
    if N <= 0:
        raise DomainError("N must be positive")
    return abs(char_partial_sum(table, index, N)) / N


def rt_via_characters(t: int, ranges, n, table: CharacterTable | None = None,
                      chunk: int = 4096):
    """(1/phi(t)) sum_chi chi(n^-1) prod_i sum_{n_i <= N_i} chi(n_i).

    Counts only tuples with every n_i a unit mod t.  ``n`` may be a single
    unit (complex result) or a sequence of units (array result).
    """
    scalar = np.ndim(n) == 0
    ns = np.atleast_1d(np.asarray(n, dtype=np.int64))
    bad = ns[np.gcd(ns, t) != 1]
    if len(bad):
        raise DomainError(f"gcd({int(bad[0])}, {t}) != 1")
    table = table or CharacterTable(t)
    total = np.zeros(len(ns), dtype=np.complex128)
    for lo in range(0, table.phi, chunk):
        chars = np.arange(lo, min(lo + chunk, table.phi))
        prod = np.ones(len(chars), dtype=np.complex128)
        for N in ranges:
            prod = prod * table.partial_sums(N, chars)
        total += np.conj(table.value_matrix(ns, chars)).T @ prod
    total /= table.phi
    return complex(total[0]) if scalar else total


def rt_error_ratio(t: int, ranges, n: int) -> float:
    """|R*_t(N; n) - N_1*..N_nu*/phi(t)| / (N_1..N_nu / t) for the unit-restricted count."""
    main = rt_main_term(t, ranges)
    err = abs(rt_count(t, ranges, n, coprime=True) - main)
    return float(err * t / math.prod(ranges))


def rt_error_diagnostic(t: int, nu: int = 8, exponent: float = 0.4, samples: int = 20,
                        seed: int | None = None) -> dict:
    """Largest error ratio over ``samples`` random units n with N_i = ceil(t^exponent)."""
    N = math.ceil(t**exponent)
    ranges = [N] * nu
    hist = product_histogram(t, ranges, coprime=True)
    main = rt_main_term(t, ranges)
    scale = Fraction(math.prod(ranges), t)
    rng = SplitMix64(t if seed is None else seed)
    units = []
    while len(units) < samples:
        n = 1 + rng.below(t - 1)
        if math.gcd(n, t) == 1:
            units.append(n)
    ratios = [float(abs(int(hist[n]) - main) / scale) for n in units]
    worst = max(range(samples), key=ratios.__getitem__)
    return {"t": t, "N": N, "nu": nu, "max_ratio": ratios[worst], "argmax_n": units[worst]}
