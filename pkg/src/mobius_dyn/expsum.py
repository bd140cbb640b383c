"""Exponential sums e_p(h u_n) along orbits of a Moebius map.

Every family is split in two steps.  A ``prepare_*`` function walks the
orbit once and returns :class:`Terms`: the affine residues u_n that occur,
their real or complex weights, the term count and the number of skipped
poles (u_n = infinity).  :meth:`Terms.evaluate` then sums
``w * e_p(h * u)`` for one or many h.  Scans over h reuse one ``Terms``.

Accumulation is blockwise: numpy's pairwise summation inside blocks of
4096 terms, Kahan compensation across blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import arith
from .errors import BudgetExceededError, DomainError
from .moebius import OrbitSpec
from .residue import product_histogram
from .rng import SplitMix64

TABLE_MAX_P = 1 << 20
BLOCK = 4096
H_CHUNK = 32
DEFAULT_MULTIPLE_BUDGET = 10**12
_U = 2.0**-53
_INT64_MUL_SAFE = 1 << 31


class UnityTable:
    """z -> e_p(z) = exp(2 pi i z / p) on integer arrays.

    ``mode='table'`` precomputes all p roots of unity; ``mode='direct'``
    evaluates cos/sin per call.
    """

    def __init__(self, p: int, mode: str | None = None):
        self.p = p
        self.mode = mode or ("table" if p <= TABLE_MAX_P else "direct")
        if self.mode == "table":
            ang = 2 * np.pi * np.arange(p, dtype=np.float64) / p
            self.table = np.exp(1j * ang)
        elif self.mode != "direct":
            raise DomainError(f"unknown unity table mode {mode!r}")

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z)
        if z.dtype == object:
            z = np.array([int(v) % self.p for v in z.ravel()], dtype=np.int64).reshape(z.shape)
        else:
            z = z % self.p
        if self.mode == "table":
            return self.table[z]
        return np.exp(2j * np.pi * (z.astype(np.float64) / self.p))


@lru_cache(maxsize=16)
def unity_table(p: int) -> UnityTable:
    return UnityTable(p)


def mulmod(values: np.ndarray, h: int, p: int) -> np.ndarray:
    """(h * values) mod p without int64 overflow."""
    if p < _INT64_MUL_SAFE:
        return (values * (h % p)) % p
    return np.array([v * h % p for v in values.tolist()], dtype=np.int64)


def _check_h(h: int, p: int) -> int:
    h = int(h)
    if h % p == 0:
        raise DomainError("h must be a nonzero residue mod p")
    return h % p


@dataclass(frozen=True)
class SumResult:
    """A computed sum with its bookkeeping.

    ``mass`` is the trivial bound sum |w_n| (equal to ``terms`` for
    unit-weight families), so ``|value| <= mass + comp_bound``.
    """

    value: complex
    terms: int
    poles_skipped: int
    comp_bound: float
    mass: float

    def __abs__(self):
        return abs(self.value)


@dataclass
class Terms:
    """h-independent data of one sum: residues u, weights w and bookkeeping.

    ``mass`` is the trivial bound on |sum| (defaults to sum |w|);
    ``acc_mass`` is sum |w| over what is actually accumulated and feeds the
    rounding bound.
    """

    p: int
    values: np.ndarray
    weights: np.ndarray | None = None
    terms: int = 0
    poles_skipped: int = 0
    mass: float | None = None
    acc_mass: float = field(init=False)
    fold: int = field(default=1, init=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.weights is None:
            self.acc_mass = float(len(self.values))
        else:
            self.weights = np.asarray(self.weights)
            self.acc_mass = float(np.abs(self.weights).sum())
        if self.mass is None:
            self.mass = self.acc_mass

    def grouped(self) -> "Terms":
        """Merge equal residues (one term per distinct u) when that shortens the sum."""
        if len(self.values) <= self.p or self.p > TABLE_MAX_P:
            return self
        w = self.weights
        if w is None:
            agg = np.bincount(self.values, minlength=self.p).astype(np.float64)
        elif np.iscomplexobj(w):
            agg = (np.bincount(self.values, w.real, self.p)
                   + 1j * np.bincount(self.values, w.imag, self.p))
        else:
            agg = np.bincount(self.values, w.astype(np.float64), self.p)
        keep = np.flatnonzero(agg)
        out = Terms(self.p, keep, agg[keep], self.terms, self.poles_skipped, self.mass)
        out.acc_mass = self.acc_mass
        out.fold = -(-len(self.values) // max(len(keep), 1))
        return out

    def evaluate_many(self, hs) -> list[SumResult]:
        """Sums for several h; each row is independent of how h is batched."""
        hs = np.asarray([_check_h(h, self.p) for h in hs], dtype=np.int64)
        p = self.p
        e = unity_table(p)
        n = len(self.values)
        s = np.zeros(len(hs), dtype=np.complex128)
        carry = np.zeros(len(hs), dtype=np.complex128)
        for lo in range(0, n, BLOCK):
            v = self.values[lo:lo + BLOCK]
            if p < _INT64_MUL_SAFE:
                z = (hs[:, None] * v[None, :]) % p
            else:
                z = np.vstack([mulmod(v, int(h), p) for h in hs])
            terms = e(z)
            if self.weights is not None:
                terms = terms * self.weights[lo:lo + BLOCK][None, :]
            part = terms.sum(axis=1)
            # Kahan step, componentwise on the complex pair
            y = part - carry
            tot = s + y
            carry = (tot - s) - y
            s = tot
        depth = math.ceil(math.log2(min(max(n, 1), BLOCK))) + 6 + self.fold
        bound = math.sqrt(2) * self.acc_mass * _U * depth
        return [SumResult(complex(v), self.terms, self.poles_skipped, bound, self.mass) for v in s]

    def evaluate(self, h: int) -> SumResult:
        return self.evaluate_many([h])[0]


def _unit_terms(spec: OrbitSpec, vals: np.ndarray) -> Terms:
    ok = vals >= 0
    return Terms(spec.p, vals[ok], None, int(ok.sum()), int(len(vals) - ok.sum()))


# -- families ---------------------------------------------------------------

def prepare_single(spec: OrbitSpec, k: int = 1, K: int = 1, N: int = 1) -> Terms:
    """Terms of sum_{K <= n < K+N} e_p(h u_{kn})."""
    if k < 1 or K < 0 or N < 0:
        raise DomainError("need k >= 1, K >= 0, N >= 0")
    return _unit_terms(spec, spec.progression(k * K, N, k))


def sum_single(spec, h, k=1, K=1, N=1) -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_single(spec, k, K, N).evaluate(h)


def prepare_coprime(spec: OrbitSpec, k: int = 1, N: int = 1, method: str = "auto") -> Terms:
    """Terms of sum over 1 <= n <= N, gcd(n, t) = 1, of e_p(h u_{kn}).

    ``method='direct'`` filters by gcd; ``'mobius'`` expands
    sum_{d | t} mu(d) sum_{m <= N/d} e_p(h u_{kdm}), signed weights mu(d).
    """
    t = spec.period
    if method == "auto":
        method = "mobius" if N >= 1024 else "direct"
    if method == "direct":
        n = np.arange(1, N + 1, dtype=np.int64)
        n = n[np.gcd(n, t) == 1]
        return _unit_terms(spec, spec.values(k * n))
    if method != "mobius":
        raise DomainError(f"unknown method {method!r}")
    vals, wts = [], []
    terms = poles = 0
    for d, mu in arith.squarefree_divisors(t):
        if N // d == 0:
            continue
        v = spec.progression(k * d, N // d, k * d)
        ok = v >= 0
        vals.append(v[ok])
        wts.append(np.full(int(ok.sum()), float(mu)))
        terms += mu * int(ok.sum())
        poles += mu * int(len(v) - ok.sum())
    values = np.concatenate(vals) if vals else np.empty(0, np.int64)
    weights = np.concatenate(wts) if wts else np.empty(0)
    return Terms(spec.p, values, weights, terms, poles, mass=float(terms))


def sum_coprime(spec, h, k=1, N=1, method="auto") -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_coprime(spec, k, N, method).evaluate(h)


def combine_residues(arrays, coeffs, p: int) -> np.ndarray:
    acc = np.zeros(len(arrays[0]), dtype=np.int64)
    for arr, a in zip(arrays, coeffs):
        if a % p:
            acc = (acc + mulmod(arr, a, p)) % p
    return acc


def prepare_multi_term(spec: OrbitSpec, coeffs, exponents, K: int = 1, N: int = 1) -> Terms:
    """Terms of sum_{K <= n < K+N} e_p(h (a_1 u_{m_1 n} + ... + a_s u_{m_s n})).

    A term is dropped if u_{m_j n} is infinity for some j with a_j != 0;
    coordinates with a zero coefficient do not enter the term.
    """
    p = spec.p
    coeffs = [int(a) % p for a in coeffs]
    exponents = [int(m) for m in exponents]
    if not coeffs or len(coeffs) != len(exponents):
        raise DomainError("need s >= 1 coefficients matching the exponents")
    if any(m2 <= m1 for m1, m2 in zip(exponents, exponents[1:])) or exponents[0] < 1:
        raise DomainError("exponents must be strictly increasing and >= 1")
    if not any(coeffs):
        raise DomainError("coefficients must not all vanish mod p")
    live = [(a, m) for a, m in zip(coeffs, exponents) if a]
    arrays = [spec.progression(m * K, N, m) for _, m in live]
    ok = np.logical_and.reduce([a >= 0 for a in arrays])
    vals = combine_residues([a[ok] for a in arrays], [a for a, _ in live], p)
    return Terms(p, vals, None, int(ok.sum()), int(N - ok.sum()))


def sum_multi_term(spec, coeffs, exponents, K=1, N=1) -> SumResult:
    return prepare_multi_term(spec, coeffs, exponents, K, N).evaluate(1)


def prepare_prime(spec: OrbitSpec, N: int) -> Terms:
    """Terms of T_h(N) = sum over primes l <= N of e_p(h u_l).

    Sieve segments and orbit values advance together in one pass.
    """
    parts = []
    if spec.has_table():
        for seg in arith.iter_prime_segments(N):
            parts.append(spec.values(seg))
    else:
        blocks = spec.blocks(0, N + 1)
        cur, base = next(blocks, np.empty(0, np.int64)), 0
        for seg in arith.iter_prime_segments(N):
            for ell in seg.tolist():
                while ell >= base + len(cur):
                    base += len(cur)
                    cur = next(blocks)
                parts.append(cur[ell - base:ell - base + 1])
    vals = np.concatenate(parts) if parts else np.empty(0, np.int64)
    return _unit_terms(spec, vals).grouped()


def sum_prime(spec, h, N) -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_prime(spec, N).evaluate(h)


def prepare_lambda(spec: OrbitSpec, N: int, dyadic: bool = False) -> Terms:
    """U_h(N) = sum_{n <= N} Lambda(n) e_p(h u_n), or with ``dyadic`` the
    sum over N <= n < 2N, gcd(n, t) = 1 (V_h(N))."""
    lo, hi = (N, 2 * N) if dyadic else (1, N + 1)
    lo = max(lo, 1)
    w = arith.lambda_weights(lo, hi)
    n = np.arange(lo, hi, dtype=np.int64)
    keep = w > 0
    if dyadic:
        keep &= np.gcd(n, spec.period) == 1
    n, w = n[keep], w[keep]
    vals = spec.values(n)
    ok = vals >= 0
    return Terms(spec.p, vals[ok], w[ok], int(ok.sum()), int(len(vals) - ok.sum())).grouped()


def sum_lambda(spec, h, N, dyadic=False) -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_lambda(spec, N, dyadic).evaluate(h)


def prepare_mobius(spec: OrbitSpec, N: int) -> Terms:
    """r_h(N) = sum_{n <= N} mu(n) e_p(h u_n)."""
    mu = arith.mobius_range(max(N, 0))[1:]
    n = np.flatnonzero(mu) + 1
    vals = spec.values(n)
    ok = vals >= 0
    w = mu[n - 1][ok].astype(np.float64)
    return Terms(spec.p, vals[ok], w, int(ok.sum()), int(len(vals) - ok.sum())).grouped()


def sum_mobius_twisted(spec, h, N) -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_mobius(spec, N).evaluate(h)


def prepare_bilinear(spec: OrbitSpec, alpha, beta) -> Terms:
    """sum_{k <= K} sum_{m <= M} alpha_k beta_m e_p(h u_{km}), one stride pass per row k."""
    alpha = np.asarray(alpha, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128)
    if len(alpha) < 1 or len(beta) < 1:
        raise DomainError("need K, M >= 1")
    M = len(beta)
    vals, wts = [], []
    poles = 0
    for k, a in enumerate(alpha.tolist(), start=1):
        row = spec.progression(k, M, k)
        ok = row >= 0
        poles += int(M - ok.sum())
        vals.append(row[ok])
        wts.append(a * beta[ok])
    values = np.concatenate(vals)
    weights = np.concatenate(wts)
    return Terms(spec.p, values, weights, len(values), poles).grouped()


def sum_bilinear(spec, h, alpha, beta) -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_bilinear(spec, alpha, beta).evaluate(h)


def prepare_multiple(spec: OrbitSpec, k: int, ranges, coprime: bool = False,
                     budget: int = DEFAULT_MULTIPLE_BUDGET) -> Terms:
    """sum over n_i <= N_i (units mod t if ``coprime``) of e_p(h u_{k n_1...n_nu}).

    Tuples are grouped by their product mod t; each residue class costs one
    orbit lookup weighted by its multiplicity.
    """
    ranges = [int(N) for N in ranges]
    if not ranges:
        raise DomainError("need nu >= 1")
    if k < 1:
        raise DomainError("need k >= 1")
    total = math.prod(ranges)
    if total > budget:
        raise BudgetExceededError("multiple sum tuples", total, budget)
    t = spec.period
    hist = product_histogram(t, ranges, coprime)
    r = np.flatnonzero(hist)
    counts = hist[r]
    vals = spec.values(k * r)
    ok = vals >= 0
    poles = int(sum(int(c) for c in counts[~ok]))
    terms = int(sum(int(c) for c in counts[ok]))
    return Terms(spec.p, vals[ok], counts[ok].astype(np.float64), terms, poles)


def sum_multiple(spec, h, k, ranges, coprime=False, budget=DEFAULT_MULTIPLE_BUDGET) -> SumResult:
    h = _check_h(h, spec.p)
    return prepare_multiple(spec, k, ranges, coprime, budget).evaluate(h)


FAMILIES = {
    "single": prepare_single,
    "coprime": prepare_coprime,
    "multi": prepare_multi_term,
    "prime": prepare_prime,
    "lambda": prepare_lambda,
    "moebius": prepare_mobius,
    "bilinear": prepare_bilinear,
    "multiple": prepare_multiple,
}


def prepare(spec: OrbitSpec, family: str, **params) -> Terms:
    try:
        fn = FAMILIES[family]
    except KeyError:
        raise DomainError(f"unknown sum family {family!r}") from None
    return fn(spec, **params)


# -- scans over h -----------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    h: int
    abs_value: float
    terms: int
    poles_skipped: int
    value: complex


@dataclass
class ScanReport:
    rows: list
    argmax: int
    max_abs: float


def resolve_h_set(p: int, h_set) -> list[int]:
    """``'all'``, ``('sample', count, seed)`` or an explicit iterable of h."""
    if h_set == "all":
        hs = list(range(1, p))
    elif isinstance(h_set, tuple) and h_set and h_set[0] == "sample":
        _, count, seed = h_set
        hs = SplitMix64(seed).sample_distinct(1, p, count)
    else:
        hs = sorted({_check_h(h, p) for h in h_set})
    if not hs:
        raise DomainError("empty h set")
    return hs


def scan_terms(terms: Terms, hs, threads: int = 1) -> list[SumResult]:
    """Evaluate ``terms`` for every h; chunking is fixed so output never depends on threads."""
    chunks = [hs[i:i + H_CHUNK] for i in range(0, len(hs), H_CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(terms.evaluate_many, chunks))
    else:
        parts = [terms.evaluate_many(c) for c in chunks]
    return [r for part in parts for r in part]


def max_scan(spec: OrbitSpec, family: str, h_set="all", threads: int = 1, **params) -> ScanReport:
    """|sum| for every h in the set, in ascending h, plus the first maximiser."""
    hs = resolve_h_set(spec.p, h_set)
    terms = prepare(spec, family, **params)
    results = scan_terms(terms, hs, threads)
    rows = [ScanRow(h, abs(r.value), r.terms, r.poles_skipped, r.value) for h, r in zip(hs, results)]
    best = max(rows, key=lambda row: row.abs_value)
    return ScanReport(rows, best.h, best.abs_value)
