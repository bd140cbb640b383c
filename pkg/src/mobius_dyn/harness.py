"""Experiment orchestration: configuration, scope checks, result tables and emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import arith, expsum
from .errors import BudgetExceededError, DomainError
from .fpcore import PARABOLIC, check_modulus
from .moebius import INF, MoebiusMap, OrbitSpec, format_point, parse_point
from .rng import SplitMix64

# -- scope ---------------------------------------------------------------------


def scope_J(N: float, t: float, p: float, kappa: float) -> Optional[int]:
    """Smallest J >= 2 with N^(1/J) <= t p^(-1/2 + kappa/2); None if no J works."""
    rhs = math.log(t) + (-0.5 + kappa / 2) * math.log(p)
    if rhs <= 0:
        return None
    J = max(2, math.ceil(math.log(N) / rhs))
    # guard the ceil against rounding at exact equality
    while J > 2 and math.log(N) / (J - 1) <= rhs:
        J -= 1
    while math.log(N) / J > rhs:
        J += 1
    return J


@dataclass
class ScopeReport:
    p: int
    t: int
    epsilon: float
    distinct_roots: bool
    satisfies_t_bound: bool
    paper_J: Optional[int] = None
    N_at_least_p_B: Optional[bool] = None
    notes: list = field(default_factory=list)

    @property
    def in_scope(self):
        return self.distinct_roots and self.satisfies_t_bound


def t_bound_holds(t: int, p: int, eps: float) -> bool:
    return math.log(t) >= (0.75 + eps) * math.log(p)


def scope_check(spec: OrbitSpec, eps: float, N: int | None = None, kappa: float | None = None,
                B: float | None = None, t: int | None = None) -> ScopeReport:
    """Whether the prime-sum theorem's hypotheses hold for this orbit.

    ``t`` overrides the computed period (for synthetic checks).
    """
    p = spec.p
    kind = spec.map.kind
    t = spec.period if t is None else t
    rep = ScopeReport(p, t, eps, kind != PARABOLIC, t_bound_holds(t, p, eps))
    if kind == PARABOLIC:
        rep.notes.append("characteristic polynomial has a repeated root")
    if not rep.satisfies_t_bound:
        rep.notes.append(f"period {t} below p^(3/4+eps) = {p ** (0.75 + eps):.6g}")
    if t == p + 1:
        rep.notes.append("orbit passes through infinity (projective period p + 1)")
    if N is not None and kappa is not None:
        rep.paper_J = scope_J(N, t, p, kappa)
    if N is not None and B is not None:
        rep.N_at_least_p_B = math.log(N) >= B * math.log(p)
    return rep


# -- configuration ---------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RandomMatrices(_Strict):
    count: int = Field(ge=1)
    seed: int
    reject_parabolic: bool = True
    min_period_exponent: Optional[float] = None


class HSample(_Strict):
    count: int = Field(ge=1)
    seed: int


class Budgets(_Strict):
    tuples: int = 10**8
    multiple: int = 10**12


class ExperimentConfig(_Strict):
    p: Optional[int] = None
    p_range: Optional[tuple[int, int]] = None
    matrices: Union[list[tuple[int, int, int, int]], RandomMatrices]
    u0: Union[int, Literal["inf", "random"]] = 0
    family: Literal["single", "coprime", "multi", "prime", "lambda", "moebius", "bilinear", "multiple"]
    params: dict = Field(default_factory=dict)
    h: Union[Literal["all"], HSample, list[int]] = "all"
    N_schedule: list[int]
    output_prefix: str = "results"
    budgets: Budgets = Field(default_factory=Budgets)
    kappa: float = 0.1
    epsilon: float = 0.1
    B: Optional[float] = None
    timing: bool = False

    @field_validator("N_schedule")
    @classmethod
    def _increasing(cls, v):
        if not v:
            raise ValueError("N schedule must not be empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("N schedule must be strictly increasing")
        if v[0] < 1:
            raise ValueError("N values must be >= 1")
        return v

    @model_validator(mode="after")
    def _primes(self):
        if (self.p is None) == (self.p_range is None):
            raise ValueError("give exactly one of p and p_range")
        if self.u0 == "random" and not isinstance(self.matrices, RandomMatrices):
            raise ValueError("u0 = 'random' needs random matrices (their seed drives u0)")
        return self

    def primes(self) -> list[int]:
        if self.p is not None:
            return [check_modulus(self.p)]
        lo, hi = self.p_range
        return [q for q in arith.sieve_primes(hi).tolist() if q >= max(lo, 3)]


def load_config(source) -> ExperimentConfig:
    """Parse a config from a path, JSON text or dict; pydantic errors carry field paths."""
    if isinstance(source, dict):
        return ExperimentConfig.model_validate(source)
    path = Path(source)
    text = path.read_text() if path.exists() else str(source)
    return ExperimentConfig.model_validate_json(text)


def random_orbits(p: int, sel: RandomMatrices, u0="random") -> list[OrbitSpec]:
    """Rejection-sample uniform nonsingular matrices (and u0) from the seeded stream."""
    rng = SplitMix64(sel.seed ^ p)
    out = []
    while len(out) < sel.count:
        a, b, c, d = (rng.below(p) for _ in range(4))
        if (a * d - b * c) % p == 0:
            continue
        m = MoebiusMap(a, b, c, d, p)
        if sel.reject_parabolic and m.kind == PARABOLIC:
            continue
        point = rng.below(p) if u0 == "random" else (INF if u0 == "inf" else int(u0))
        spec = OrbitSpec(m, point)
        if sel.min_period_exponent is not None and spec.period < p ** sel.min_period_exponent:
            continue
        out.append(spec)
    return out


def _orbits(cfg: ExperimentConfig, p: int) -> list[OrbitSpec]:
    if isinstance(cfg.matrices, RandomMatrices):
        return random_orbits(p, cfg.matrices, cfg.u0)
    u0 = INF if cfg.u0 == "inf" else cfg.u0
    return [OrbitSpec(MoebiusMap(*m, p), u0) for m in cfg.matrices]


# -- results -------------------------------------------------------------------------


@dataclass
class ResultRow:
    p: int
    matrix: str
    u0: str
    t: int
    kind: str
    family: str
    N: int
    h: int
    abs_value: float
    terms: int
    poles_skipped: int
    ratio: float
    wall_time: float


FIELDS = [f.name for f in fields(ResultRow)]
_FLOATS = {"abs_value", "ratio", "wall_time"}
_INTS = {"p", "t", "N", "h", "terms", "poles_skipped"}


@dataclass
class ExperimentResult:
    rows: list
    summary: dict
    partial: bool = False


def _family_params(cfg: ExperimentConfig, N: int) -> dict:
    params = dict(cfg.params)
    fam = cfg.family
    if fam in ("single", "coprime", "multi", "prime", "lambda", "moebius"):
        params["N"] = N
    elif fam == "multiple":
        params.setdefault("k", 1)
        params["budget"] = cfg.budgets.multiple
    elif fam == "bilinear":
        params.setdefault("alpha", [1.0] * N)
        params.setdefault("beta", [1.0] * N)
    return params


def _h_set(cfg: ExperimentConfig):
    if cfg.h == "all":
        return "all"
    if isinstance(cfg.h, HSample):
        return ("sample", cfg.h.count, cfg.h.seed)
    return list(cfg.h)


def eta_hat(max_abs: float, trivial: float, p: int) -> float:
    """-log(max |sum| / trivial bound) / log p; inf when the max vanishes."""
    if max_abs <= 0 or trivial <= 0:
        return math.inf
    return -math.log(max_abs / trivial) / math.log(p)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Run every (p, orbit, N) cell of the config; rows come out in config order."""
    rows: list[ResultRow] = []
    errors = []
    for p in cfg.primes():
        for spec in _orbits(cfg, p):
            mat = ",".join(str(x) for x in spec.map.entries)
            for N in cfg.N_schedule:
                start = time.perf_counter()
                try:
                    terms = expsum.prepare(spec, cfg.family, **_family_params(cfg, N))
                    hs = expsum.resolve_h_set(p, _h_set(cfg))
                    results = expsum.scan_terms(terms, hs, threads)
                except BudgetExceededError as exc:
                    errors.append({"p": p, "matrix": mat, "N": N, "error": str(exc)})
                    continue
                elapsed = time.perf_counter() - start if cfg.timing else 0.0
                mass = terms.mass or 0.0
                for h, r in zip(hs, results):
                    a = abs(r.value)
                    rows.append(ResultRow(p, mat, format_point(spec.u0), spec.period, spec.map.kind,
                                          cfg.family, N, h, a, r.terms, r.poles_skipped,
                                          a / mass if mass else 0.0, elapsed))
    summary = summarize(rows, cfg)
    if errors:
        summary["budget_errors"] = errors
    return ExperimentResult(rows, summary, bool(errors))


def summarize(rows, cfg: ExperimentConfig | None = None) -> dict:
    """Per-N maxima and empirical exponents, computed from the rows alone."""
    by_n: dict[int, dict] = {}
    for r in rows:
        cell = by_n.setdefault(r.N, {"max_abs": 0.0, "max_ratio": 0.0, "trivial": 0.0, "p": r.p})
        if r.ratio > cell["max_ratio"]:
            cell["max_ratio"] = r.ratio
        if r.abs_value > cell["max_abs"]:
            cell["max_abs"] = r.abs_value
            if r.family == "prime":
                # pi(N), counting primes whose orbit point is infinity
                cell["trivial"] = r.terms + r.poles_skipped
            else:
                cell["trivial"] = r.abs_value / r.ratio if r.ratio else 0.0
            cell["p"] = r.p
    per_n = []
    for N in sorted(by_n):
        c = by_n[N]
        per_n.append({
            "N": N,
            "max_abs": _round(c["max_abs"]),
            "max_ratio": _round(c["max_ratio"]),
            "eta_hat": _round(eta_hat(c["max_abs"], c["trivial"], c["p"])),
            "eta_theorem_form": _round(eta_hat(c["max_abs"], N, c["p"])),
        })
    ratios = [c["max_ratio"] for c in per_n]
    trend = "decreasing" if all(b <= a for a, b in zip(ratios, ratios[1:])) else "mixed"
    out = {"rows": len(rows), "per_N": per_n, "trend": trend}
    if cfg is not None:
        out["family"] = cfg.family
    return out


# -- emission -----------------------------------------------------------------------


def _round(x: float) -> float:
    return float(f"{x:.12g}")


def _fmt(name, v):
    if name in _FLOATS:
        return f"{v:.12g}"
    return str(v)


def emit(rows, fmt: str = "csv") -> bytes:
    """Serialize result rows; CSV columns follow ResultRow field order."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for r in rows:
            w.writerow([_fmt(k, getattr(r, k)) for k in FIELDS])
        return buf.getvalue().encode()
    if fmt == "json":
        recs = []
        for r in rows:
            d = asdict(r)
            for k in _FLOATS:
                d[k] = _round(d[k])
            recs.append(d)
        return (json.dumps(recs, indent=1) + "\n").encode()
    raise DomainError(f"unknown format {fmt!r}")


def _row_from_strings(d: dict) -> ResultRow:
    vals = {}
    for k in FIELDS:
        v = d[k]
        vals[k] = float(v) if k in _FLOATS else int(v) if k in _INTS else str(v)
    return ResultRow(**vals)


def load_rows(data: bytes, fmt: str = "csv") -> list[ResultRow]:
    text = data.decode()
    if fmt == "csv":
        return [_row_from_strings(d) for d in csv.DictReader(io.StringIO(text))]
    return [_row_from_strings(d) for d in json.loads(text)]


def write_outputs(result: ExperimentResult, out_dir, prefix: str = "results") -> dict:
    """Write <prefix>.csv, <prefix>.json and <prefix>_summary.json into ``out_dir``."""
    out = Path(out_dir)
    paths = {}
    try:
        out.mkdir(parents=True, exist_ok=True)
        for fmt in ("csv", "json"):
            path = out / f"{prefix}.{fmt}"
            path.write_bytes(emit(result.rows, fmt))
            paths[fmt] = path
        path = out / f"{prefix}_summary.json"
        summary = {**result.summary, "partial": result.partial}
        path.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        paths["summary"] = path
    except OSError as exc:
        raise OSError(f"writing results to {out}: {exc}") from exc
    return paths
