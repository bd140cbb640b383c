"""Moebius maps x -> (ax + b)/(cx + d) acting on the projective line P^1(F_p).

Points are plain ints for affine residues and the singleton :data:`INF` for
the point at infinity.  Orbit streams work in projective coordinates and
convert to affine residues in blocks with a single field inversion per block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Union

import numpy as np

from .errors import DomainError, UnsupportedError
from .fpcore import (
    NONSPLIT,
    PARABOLIC,
    check_modulus,
    classify,
    divisors_of,
    factorint,
    fp2_order,
)

BLOCK = 4096

#: Largest period tabulated in memory by :meth:`OrbitSpec.table`.
TABLE_LIMIT = 1 << 24


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()
ProjPoint = Union[int, _Infinity]


def parse_point(text, p: int) -> ProjPoint:
    if isinstance(text, str) and text.strip().lower() in ("inf", "oo", "infinity", "∞"):
        return INF
    try:
        return int(text) % p
    except ValueError:
        raise DomainError(f"not a point of P^1: {text!r}") from None


def format_point(point: ProjPoint) -> str:
    return "inf" if point is INF else str(point)


def batch_affine(xs, zs, p: int) -> np.ndarray:
    """Affine residues x/z for projective pairs, -1 where z = 0.

    Montgomery's trick: prefix products, one modular inversion, then a
    backward sweep recovering every individual inverse.
    """
    n = len(xs)
    prefix = []
    acc = 1
    for z in zs:
        if z:
            acc = acc * z % p
        prefix.append(acc)
    out = [-1] * n
    if not n:
        return np.empty(0, dtype=np.int64)
    inv = pow(acc, -1, p)
    for i in range(n - 1, 0, -1):
        z = zs[i]
        if z:
            out[i] = xs[i] * (inv * prefix[i - 1] % p) % p
            inv = inv * z % p
    if zs[0]:
        out[0] = xs[0] * inv % p
    return np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class MoebiusMap:
    """Nonsingular 2x2 matrix over F_p up to scalars.

    The stored representative has its first nonzero entry (in the order
    a, b, c, d) equal to 1, so two maps are equal iff their entries are.
    """

    a: int
    b: int
    c: int
    d: int
    p: int

    def __post_init__(self):
        p = check_modulus(self.p)
        a, b, c, d = self.a % p, self.b % p, self.c % p, self.d % p
        if (a * d - b * c) % p == 0:
            raise DomainError(f"singular matrix {[[a, b], [c, d]]} mod {p}")
        lead = next(x for x in (a, b, c, d) if x)
        s = pow(lead, -1, p)
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v * s % p)

    @classmethod
    def identity(cls, p):
        return cls(1, 0, 0, 1, p)

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d)

    @cached_property
    def spectral(self):
        return classify(self.a, self.b, self.c, self.d, self.p)

    @property
    def kind(self):
        return self.spectral.kind

    def is_identity(self):
        return self.entries == (1, 0, 0, 1)

    def apply(self, point: ProjPoint) -> ProjPoint:
        a, b, c, d, p = self.a, self.b, self.c, self.d, self.p
        if point is INF:
            return a * pow(c, -1, p) % p if c else INF
        den = (c * point + d) % p
        if den == 0:
            return INF
        return (a * point + b) * pow(den, -1, p) % p

    def __call__(self, point):
        return self.apply(point)

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """``self o other``: the map P -> self(other(P))."""
        if other.p != self.p:
            raise DomainError("maps over different fields")
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        p = self.p
        return MoebiusMap((a * e + b * g) % p, (a * f + b * h) % p,
                          (c * e + d * g) % p, (c * f + d * h) % p, p)

    __matmul__ = compose

    def __pow__(self, n: int) -> "MoebiusMap":
        if n < 0:
            raise DomainError("negative powers are not supported")
        result = MoebiusMap.identity(self.p)
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    @cached_property
    def order(self) -> int:
        """Order of the map in PGL_2(F_p)."""
        if self.is_identity():
            return 1
        sd = self.spectral
        if sd.kind == PARABOLIC:
            return self.p
        group = self.p + 1 if sd.kind == NONSPLIT else self.p - 1
        return fp2_order(sd.ratio, factorint(group))

    @cached_property
    def _divisor_powers(self):
        m = self.order
        return [(dv, self ** dv) for dv in divisors_of(factorint(m))]

    def __repr__(self):
        return f"MoebiusMap([[{self.a}, {self.b}], [{self.c}, {self.d}]] mod {self.p})"


def apply(m: MoebiusMap, point: ProjPoint) -> ProjPoint:
    return m.apply(point)


def compose(m1: MoebiusMap, m2: MoebiusMap) -> MoebiusMap:
    return m1.compose(m2)


def power(m: MoebiusMap, n: int) -> MoebiusMap:
    return m ** n


@dataclass(frozen=True)
class OrbitSpec:
    """The sequence u_n = psi^n(u_0) for a Moebius map psi."""

    map: MoebiusMap
    u0: ProjPoint

    def __post_init__(self):
        if self.u0 is not INF:
            object.__setattr__(self, "u0", int(self.u0) % self.map.p)

    @classmethod
    def build(cls, p, entries, u0):
        return cls(MoebiusMap(*entries, p), u0)

    @property
    def p(self):
        return self.map.p

    @cached_property
    def period(self) -> int:
        if self.map.kind == PARABOLIC:
            # a non-identity parabolic map has prime order p in PGL_2
            if self.map.is_identity() or self.map.apply(self.u0) == self.u0:
                return 1
            return self.p
        return period_spectral(self)

    def point(self, n: int) -> ProjPoint:
        """Random access u_n."""
        return (self.map ** n).apply(self.u0)

    def _u0_proj(self):
        return (1, 0) if self.u0 is INF else (self.u0, 1)

    def blocks(self, start: int, count: int, stride: int = 1, block: int = BLOCK):
        """Yield int64 arrays of u_start, u_{start+stride}, ... (-1 marks infinity).

        Stepping uses the single stride map A^stride in projective
        coordinates; each block is made affine with one inversion.
        """
        if stride < 1:
            raise DomainError("stride must be >= 1")
        p = self.p
        a, b, c, d = (self.map ** stride).entries
        x, z = self._u0_proj()
        if start:
            sa, sb, sc, sd = (self.map ** start).entries
            x, z = (sa * x + sb * z) % p, (sc * x + sd * z) % p
        done = 0
        while done < count:
            n = min(block, count - done)
            xs, zs = [0] * n, [0] * n
            for i in range(n):
                xs[i] = x
                zs[i] = z
                x, z = (a * x + b * z) % p, (c * x + d * z) % p
            yield batch_affine(xs, zs, p)
            done += n

    @cached_property
    def _table(self) -> np.ndarray:
        t = self.period
        if t > TABLE_LIMIT:
            raise UnsupportedError(f"period {t} exceeds the in-memory table limit")
        out = np.concatenate(list(self.blocks(0, t))) if t else np.empty(0, np.int64)
        out.flags.writeable = False
        return out

    def has_table(self) -> bool:
        return self.period <= TABLE_LIMIT

    def table(self) -> np.ndarray:
        """One full period u_0 .. u_{t-1} as affine residues, -1 for infinity."""
        return self._table

    def values(self, indices) -> np.ndarray:
        """u_n for an array of nonnegative indices (-1 for infinity)."""
        indices = np.asarray(indices, dtype=np.int64)
        if self.has_table():
            return self._table[indices % self.period]
        t = self.period
        out = np.empty(len(indices), dtype=np.int64)
        for i, n in enumerate(indices.tolist()):
            u = self.point(n % t)
            out[i] = -1 if u is INF else u
        return out

    def progression(self, start: int, count: int, stride: int = 1) -> np.ndarray:
        """u_start, u_{start+stride}, ... as one int64 array (-1 for infinity)."""
        if count <= 0:
            return np.empty(0, dtype=np.int64)
        if self.has_table():
            idx = (start + stride * np.arange(count, dtype=np.int64)) % self.period
            return self._table[idx]
        return np.concatenate(list(self.blocks(start, count, stride)))


def orbit_iter(spec: OrbitSpec, start: int = 0, count: int = 0, stride: int = 1) -> Iterator[ProjPoint]:
    """Stream u_start, u_{start+stride}, ..., count points in total."""
    for blk in spec.blocks(start, count, stride):
        for v in blk.tolist():
            yield INF if v < 0 else v


def period_direct(spec: OrbitSpec) -> int:
    """Least t >= 1 with psi^t(u0) = u0, by stepping the orbit."""
    p = spec.p
    a, b, c, d = spec.map.entries
    x0, z0 = spec._u0_proj()
    x, z = x0, z0
    for t in range(1, p + 2):
        x, z = (a * x + b * z) % p, (c * x + d * z) % p
        if (x * z0 - x0 * z) % p == 0:
            return t
    raise AssertionError("orbit on P^1(F_p) longer than p + 1")


def period_spectral(spec: OrbitSpec) -> int:
    """Period from the order m of lambda1/lambda2: least divisor t of m fixing u0."""
    m = spec.map
    if m.kind == PARABOLIC:
        raise UnsupportedError("period_spectral needs two distinct eigenvalues; use period_direct")
    u0 = spec.u0
    for dv, mp in m._divisor_powers:
        if mp.apply(u0) == u0:
            return dv
    raise AssertionError("map order does not fix the initial point")


def all_points(p: int):
    return list(range(p)) + [INF]
