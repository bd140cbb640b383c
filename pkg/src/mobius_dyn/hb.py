"""Heath-Brown's identity for Lambda, its dyadic decomposition and the box sums S(M, N).

Everything log-weighted is carried as :class:`~mobius_dyn.arith.LogVector`
so the identity can be checked with integer equality.  For n < 2X and
Z = X^(1/J)::

    Lambda(n) = - sum_{j=1}^{J} (-1)^j C(J, j)
                  sum_{m_1..m_j <= Z} mu(m_1)..mu(m_j)
                  sum_{m_1..m_j n_1..n_j = n} log n_1

The cap m <= Z is tested exactly as m^J <= X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .arith import LogVector, divisors, factor, mobius_mu, von_mangoldt
from .errors import BudgetExceededError, DomainError
from .expsum import SumResult, _check_h, sum_lambda, unity_table
from .moebius import OrbitSpec

DEFAULT_TUPLE_BUDGET = 10**8


def hb_sign(J: int, j: int) -> int:
    """Coefficient -(-1)^j C(J, j) of the j-th convolution."""
    return -((-1) ** j) * math.comb(J, j)


@dataclass(frozen=True)
class HBTerm:
    j: int
    sign: int
    J: int
    X: int

    @property
    def Z(self) -> float:
        return self.X ** (1.0 / self.J)

    def admits(self, m: int) -> bool:
        """m <= Z, decided in integers."""
        return m**self.J <= self.X


def hb_terms(J: int, X: int) -> list[HBTerm]:
    return [HBTerm(j, hb_sign(J, j), J, X) for j in range(1, J + 1)]


def _ordered_count(n: int, k: int) -> int:
    """Number of ordered factorizations of n into k positive parts."""
    if k == 0:
        return 1 if n == 1 else 0
    return math.prod(math.comb(e + k - 1, k - 1) for _, e in factor(n).factors)


class HBEvaluator:
    """Right-hand side of the identity for fixed (J, X), memoized on (n, m-parts, n-parts)."""

    def __init__(self, J: int, X: int):
        if J < 1:
            raise DomainError("J must be >= 1")
        self.J, self.X = J, X
        self._memo: dict = {}
        self.tuples = 0

    def capped(self, m: int) -> bool:
        return m**self.J <= self.X

    def _inner(self, e: int, pm: int, pn: int):
        """(LogVector, tuple count) summed over ordered factorizations of e into
        pm capped squarefree m-parts then pn n-parts, weight mu(m..) log n_1."""
        key = (e, pm, pn)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if pm:
            acc, cnt = LogVector(), 0
            for m in divisors(e):
                if not self.capped(m):
                    break
                mu = mobius_mu(m)
                if mu:
                    v, c = self._inner(e // m, pm - 1, pn)
                    acc = acc + v * mu
                    cnt += c
        else:
            acc, cnt = LogVector(), 0
            for n1 in divisors(e):
                mult = _ordered_count(e // n1, pn - 1)
                if mult:
                    acc = acc + LogVector.log_of(n1) * mult
                    cnt += mult
        self._memo[key] = (acc, cnt)
        return acc, cnt

    def evaluate(self, n: int) -> tuple[LogVector, int]:
        if not 1 <= n < 2 * self.X:
            raise DomainError(f"identity needs 1 <= n < 2X (n={n}, X={self.X})")
        total, tuples = LogVector(), 0
        for j in range(1, self.J + 1):
            v, c = self._inner(n, j, j)
            total = total + v * hb_sign(self.J, j)
            tuples += c
        self.tuples += tuples
        return total, tuples


def hb_lambda_eval(n: int, J: int, X: int) -> LogVector:
    return HBEvaluator(J, X).evaluate(n)[0]


@dataclass
class HBVerifyReport:
    J: int
    X: int
    checked: int
    mismatches: list
    max_fanout: int
    total_tuples: int

    @property
    def ok(self):
        return not self.mismatches and self.checked == 2 * self.X - 1


def hb_verify_range(J: int, X: int, budget: int = DEFAULT_TUPLE_BUDGET) -> HBVerifyReport:
    """Check the identity against Lambda(n) exactly for every 1 <= n < 2X."""
    ev = HBEvaluator(J, X)
    bad, fanout = [], 0
    for n in range(1, 2 * X):
        got, tuples = ev.evaluate(n)
        fanout = max(fanout, tuples)
        if ev.tuples > budget:
            raise BudgetExceededError("Heath-Brown verification tuples", ev.tuples, budget)
        if got != von_mangoldt(n):
            bad.append(n)
    return HBVerifyReport(J, X, 2 * X - 1, bad, fanout, ev.tuples)


# -- dyadic boxes -------------------------------------------------------------

@dataclass(frozen=True)
class DyadicVector:
    """Box m_i in [M_i, 2M_i), n_i in [N_i, 2N_i) for one j of an identity with parameter J."""

    J: int
    j: int
    M: tuple
    N: tuple

    @property
    def sign(self):
        return hb_sign(self.J, self.j)

    def starts(self):
        return self.M + self.N


def _cap(N: int, J: int) -> int:
    """floor(N^(1/J)), exactly."""
    z = int(round(N ** (1.0 / J)))
    while z**J > N:
        z -= 1
    while (z + 1) ** J <= N:
        z += 1
    return z


def dyadic_cover(N: int, J: int) -> list[DyadicVector]:
    """Every dyadic box (M_1..M_j, N_1..N_j), j <= J, holding some admissible tuple.

    Admissible: m_i <= N^(1/J) and product of all 2j variables in [N, 2N).
    """
    if N < 2 or J < 1:
        raise DomainError("need N >= 2 and J >= 1")
    z = _cap(N, J)
    out = []
    for j in range(1, J + 1):
        dims = 2 * j

        def rec(prefix, lo, hi):
            i = len(prefix)
            if i == dims:
                if hi >= N:
                    out.append(DyadicVector(J, j, tuple(prefix[:j]), tuple(prefix[j:])))
                return
            b = 1
            while lo * b < 2 * N:
                if i < j:
                    if b > z:
                        break
                    top = min(2 * b - 1, z)
                else:
                    top = 2 * b - 1
                rec(prefix + [b], lo * b, hi * top)
                b *= 2

        rec([], 1, 1)
    return out


@dataclass
class BoxData:
    """Aggregated weights of one box, keyed by the product n in [N, 2N)."""

    ns: np.ndarray
    weights: np.ndarray
    nonzero: np.ndarray  # tuples per n with nonzero weight
    tuples: int


def _dyadic_range(B, cap=None):
    top = 2 * B - 1 if cap is None else min(2 * B - 1, cap)
    return range(B, top + 1)


@lru_cache(maxsize=None)
def box_data(vec: DyadicVector, N: int, budget: int = DEFAULT_TUPLE_BUDGET) -> BoxData:
    """Sum of mu(m_1)..mu(m_j) log n_1 over the box, grouped by product in [N, 2N)."""
    z = _cap(N, vec.J)
    hi = 2 * N
    # m-part: product -> (mu sum, tuple count, nonzero-mu count)
    cur = {1: (1, 1, 1)}
    for M in vec.M:
        nxt = {}
        for d, (s, c, nz) in cur.items():
            for m in _dyadic_range(M, z):
                dm = d * m
                if dm >= hi:
                    break
                mu = mobius_mu(m)
                s0, c0, n0 = nxt.get(dm, (0, 0, 0))
                nxt[dm] = (s0 + s * mu, c0 + c, n0 + (nz if mu else 0))
        cur = nxt
    # n_1 carries the log weight
    stage = {}
    for d, (s, c, nz) in cur.items():
        for n1 in _dyadic_range(vec.N[0]):
            dn = d * n1
            if dn >= hi:
                break
            w0, c0, n0 = stage.get(dn, (LogVector(), 0, 0))
            w = w0 + LogVector.log_of(n1) * s if s and n1 > 1 else w0
            stage[dn] = (w, c0 + c, n0 + (nz if n1 > 1 else 0))
    count = 0
    for B in vec.N[1:]:
        nxt = {}
        for d, (w, c, nz) in stage.items():
            for n in _dyadic_range(B):
                dn = d * n
                if dn >= hi:
                    break
                w0, c0, n0 = nxt.get(dn, (LogVector(), 0, 0))
                nxt[dn] = (w0 + w, c0 + c, n0 + nz)
                count += c
                if count > budget:
                    raise BudgetExceededError("box enumeration", count, budget)
        stage = nxt
    keep = sorted(n for n in stage if N <= n < hi)
    ns = np.array(keep, dtype=np.int64)
    ws = np.array([stage[n][0].value() for n in keep], dtype=np.float64)
    nzs = np.array([stage[n][2] for n in keep], dtype=np.int64)
    tuples = sum(stage[n][1] for n in keep)
    return BoxData(ns, ws, nzs, tuples)


def _box_sum(data: BoxData, e_vals: np.ndarray, mask: np.ndarray, pole: np.ndarray, N: int):
    idx = data.ns - N
    use = mask[idx]
    value = complex(np.dot(data.weights[use], e_vals[idx[use]])) if use.any() else 0j
    terms = int(data.nonzero[use].sum())
    poles = int(data.nonzero[pole[idx]].sum())
    mass = float(np.abs(data.weights[use]).sum())
    return value, terms, poles, mass


def _window(spec: OrbitSpec, h: int, N: int):
    """e_p(h u_n) for n in [N, 2N), with masks for usable n (coprime, finite) and poles."""
    n = np.arange(N, 2 * N, dtype=np.int64)
    vals = spec.values(n)
    coprime = np.gcd(n, spec.period) == 1
    pole = (vals < 0) & coprime
    mask = (vals >= 0) & coprime
    e = np.zeros(N, dtype=np.complex128)
    if mask.any():
        e[mask] = unity_table(spec.p)((vals[mask] * h) % spec.p if spec.p < 1 << 31
                                      else np.array([v * h % spec.p for v in vals[mask].tolist()]))
    return e, mask, pole


def s_mn_sum(spec: OrbitSpec, h: int, vector: DyadicVector, N: int,
             budget: int = DEFAULT_TUPLE_BUDGET) -> SumResult:
    """S(M, N): the box sum restricted to product ~ N and gcd(product, t) = 1."""
    h = _check_h(h, spec.p)
    data = box_data(vector, N, budget)
    e, mask, pole = _window(spec, h, N)
    value, terms, poles, mass = _box_sum(data, e, mask, pole, N)
    return SumResult(value, terms, poles, mass * 2.0**-50, mass)


@dataclass
class ReconstructReport:
    N: int
    J: int
    h: int
    lhs: complex
    rhs: complex
    per_j: dict = field(default_factory=dict)
    boxes: int = 0
    tuples: int = 0

    @property
    def diff(self):
        return abs(self.lhs - self.rhs)

    @property
    def tolerance(self):
        return 1e-8 * max(self.tuples, 1)

    @property
    def ok(self):
        return self.diff <= self.tolerance


def hb_reconstruct(spec: OrbitSpec, h: int, N: int, J: int,
                   budget: int = DEFAULT_TUPLE_BUDGET) -> ReconstructReport:
    """sum over boxes of sign(j) S(M, N) against V_h(N) = sum* Lambda(n) e_p(h u_n), n ~ N."""
    h = _check_h(h, spec.p)
    boxes = dyadic_cover(N, J)
    e, mask, pole = _window(spec, h, N)
    per_j = {j: 0j for j in range(1, J + 1)}
    tuples = 0
    for vec in boxes:
        data = box_data(vec, N, budget)
        tuples += data.tuples
        if tuples > budget:
            raise BudgetExceededError("reconstruction tuples", tuples, budget)
        value, _, _, _ = _box_sum(data, e, mask, pole, N)
        per_j[vec.j] += vec.sign * value
    lhs = sum(per_j.values())
    rhs = sum_lambda(spec, h, N, dyadic=True).value
    return ReconstructReport(N, J, h, lhs, rhs, per_j, len(boxes), tuples)


def box_regime(vec: DyadicVector, N: int, t: int, kappa: float, j0: int) -> str:
    """Which case of the prime-sum argument a box falls into.

    'bilinear' when prod M_i >= N^kappa, 'long' when some N_k >= t,
    'multiple' when more than j0 of the N_i reach t^(1/3 + kappa),
    'remaining' otherwise.
    """
    if math.prod(vec.M) >= N**kappa:
        return "bilinear"
    if any(b >= t for b in vec.N):
        return "long"
    if sum(b >= t ** (1 / 3 + kappa) for b in vec.N) > j0:
        return "multiple"
    return "remaining"
