import math
import random
from collections import Counter

import pytest

from conftest import make_spec
from mobius_dyn.arith import LogVector, von_mangoldt
from mobius_dyn.errors import BudgetExceededError, DomainError
from mobius_dyn.expsum import sum_lambda
from mobius_dyn.moebius import INF
from mobius_dyn.hb import (
    DyadicVector, HBEvaluator, _cap, box_data, box_regime, dyadic_cover, hb_lambda_eval,
    hb_reconstruct, hb_sign, hb_terms, hb_verify_range, s_mn_sum,
)
import oracles as O


def _ordered(n, k):
    """All ordered k-tuples of positive integers with product n."""
    if k == 0:
        if n == 1:
            yield ()
        return
    for d in range(1, n + 1):
        if n % d == 0:
            for rest in _ordered(n // d, k - 1):
                yield (d,) + rest


def naive_hb(n, J, X):
    total = LogVector()
    for j in range(1, J + 1):
        for tup in _ordered(n, 2 * j):
            ms, ns = tup[:j], tup[j:]
            if any(m**J > X for m in ms):
                continue
            w = math.prod(O.mu(m) for m in ms)
            if w and ns[0] > 1:
                total = total + LogVector.log_of(ns[0]) * (w * hb_sign(J, j))
    return total


def _dyadic(x):
    return 1 << (x.bit_length() - 1)


def admissible_tuples(N, J):
    """(j, tuple) with m_i <= N^(1/J) and product in [N, 2N)."""
    z = _cap(N, J)
    for n in range(N, 2 * N):
        for j in range(1, J + 1):
            for tup in _ordered(n, 2 * j):
                if all(m <= z for m in tup[:j]):
                    yield j, tup


def test_signs():
    assert [hb_sign(3, j) for j in (1, 2, 3)] == [3, -3, 1]
    for J in range(1, 8):
        assert sum(abs(t.sign) for t in hb_terms(J, 100)) == 2**J - 1
    t = hb_terms(2, 100)[0]
    assert t.Z == pytest.approx(10.0) and t.admits(10) and not t.admits(11)


def test_lambda_eval_examples():
    assert hb_lambda_eval(12, 1, 10) == LogVector()
    assert hb_lambda_eval(8, 1, 10) == LogVector({2: 1})
    assert hb_lambda_eval(1, 2, 37) == LogVector()
    with pytest.raises(DomainError):
        hb_lambda_eval(20, 1, 10)


@pytest.mark.parametrize("J,X", [(1, 40), (2, 30), (3, 20), (4, 12)])
def test_evaluator_matches_naive_enumeration(J, X):
    ev = HBEvaluator(J, X)
    for n in range(1, 2 * X):
        got, tuples = ev.evaluate(n)
        assert got == naive_hb(n, J, X)
        assert got == von_mangoldt(n)


@pytest.mark.parametrize("J,X", [(1, 500), (2, 100), (3, 50)])
def test_verify_range(J, X):
    rep = hb_verify_range(J, X)
    assert rep.ok and rep.checked == 2 * X - 1 and not rep.mismatches
    assert rep.max_fanout > 0


def test_identity_fails_beyond_range():
    # the cap matters: past 2X the identity is not claimed and does break
    ev = HBEvaluator(1, 10)
    ev.X = 10
    bad = [n for n in range(20, 200) if ev._inner(n, 1, 1)[0] != von_mangoldt(n)]
    assert bad


def test_verify_budget():
    with pytest.raises(BudgetExceededError):
        hb_verify_range(3, 50, budget=1000)


def test_cover_small_example():
    boxes = {(b.M, b.N) for b in dyadic_cover(4, 1)}
    assert {M for M, _ in boxes} == {(1,), (2,), (4,)}
    assert boxes == {((1,), (4,)), ((2,), (2,)), ((4,), (1,))}


@pytest.mark.parametrize("N,J", [(4, 1), (16, 2), (37, 2), (64, 3), (100, 2), (256, 2), (128, 3)])
def test_cover_is_complete_and_unique(N, J):
    boxes = dyadic_cover(N, J)
    keys = [(b.j, b.M, b.N) for b in boxes]
    assert len(keys) == len(set(keys))
    assert all(b.J == J and b.sign == hb_sign(J, b.j) for b in boxes)
    z = _cap(N, J)
    assert all(M <= z for b in boxes for M in b.M)
    hits = Counter()
    for j, tup in admissible_tuples(N, J):
        key = (j, tuple(_dyadic(x) for x in tup[:j]), tuple(_dyadic(x) for x in tup[j:]))
        hits[key] += 1
    assert set(hits) <= set(keys)
    assert len(boxes) <= (math.log2(2 * N) + 1) ** (2 * J)
    # every returned box is consistent with its tuple count
    for b in boxes:
        assert box_data(b, N).tuples == hits.get((b.j, b.M, b.N), 0)


def test_cover_rejects_bad_input():
    with pytest.raises(DomainError):
        dyadic_cover(1, 2)


def naive_smn(spec, h, vec, N):
    z = _cap(N, vec.J)
    t = spec.period
    p = spec.p
    val = 0j
    ranges = [range(M, min(2 * M, z + 1)) for M in vec.M] + [range(B, 2 * B) for B in vec.N]

    def rec(i, prod, w, logn1):
        nonlocal val
        if prod >= 2 * N:
            return
        if i == len(ranges):
            if prod >= N and math.gcd(prod, t) == 1:
                u = spec.point(prod)
                if u is not INF and w:
                    val += w * logn1 * O.ep(h * u, p)
            return
        for x in ranges[i]:
            if i < vec.j:
                rec(i + 1, prod * x, w * O.mu(x), logn1)
            elif i == vec.j:
                rec(i + 1, prod * x, w, math.log(x))
            else:
                rec(i + 1, prod * x, w, logn1)

    rec(0, 1, 1, 0.0)
    return val


def test_smn_matches_naive():
    rng = random.Random(4)
    for _ in range(6):
        p, m, u0 = O.random_case(rng.randrange(10**6))
        spec = make_spec(p, m, u0)
        h = rng.randrange(1, p)
        for N, J in [(16, 2), (40, 2), (64, 3)]:
            for vec in dyadic_cover(N, J):
                r = s_mn_sum(spec, h, vec, N)
                assert abs(r.value - naive_smn(spec, h, vec, N)) < 1e-9 * max(box_data(vec, N).tuples, 1)


def test_log_weight_sits_on_first_n_variable():
    N = 64
    vec = DyadicVector(2, 2, (1, 1), (2, 16))
    swapped = DyadicVector(2, 2, (1, 1), (16, 2))
    a, b = box_data(vec, N), box_data(swapped, N)
    assert a.ns.tolist() == b.ns.tolist()
    assert a.weights.tolist() != b.weights.tolist()
    spec = make_spec(101, (2, 3, 5, 7), 4)
    for v in (vec, swapped):
        assert abs(s_mn_sum(spec, 3, v, N).value - naive_smn(spec, 3, v, N)) < 1e-9


def test_smn_reductions():
    spec = make_spec(101, (2, 3, 5, 7), 4)
    # J = 2, N = 16: the cap is 4, so m = 4 only and mu(4) = 0 kills every term
    dead = DyadicVector(2, 1, (4,), (4,))
    assert box_data(dead, 16).tuples > 0
    r = s_mn_sum(spec, 1, dead, 16)
    assert r.value == 0 and r.terms == 0
    # j = 1, M = {1}: the plain log-weighted sum over n ~ N with gcd(n, t) = 1
    N = 32
    r = s_mn_sum(spec, 5, DyadicVector(1, 1, (1,), (N,)), N)
    t = spec.period
    ref = sum(math.log(n) * O.ep(5 * spec.point(n), 101)
              for n in range(N, 2 * N) if math.gcd(n, t) == 1)
    assert abs(r.value - ref) < 1e-9 * N


@pytest.mark.parametrize("seed", range(8))
def test_reconstruction(seed):
    p, m, u0 = O.random_case(seed, primes=(101, 1009))
    spec = make_spec(p, m, u0)
    for N in (16, 64, 128):
        for J in (2, 3):
            for h in (1, p - 1):
                rep = hb_reconstruct(spec, h, N, J)
                assert rep.ok, (rep.diff, rep.tolerance)
                assert abs(rep.rhs - sum_lambda(spec, h, N, dyadic=True).value) == 0


def test_reconstruction_tuple_count():
    for N, J in [(16, 2), (50, 2), (64, 3)]:
        direct = sum(1 for _ in admissible_tuples(N, J))
        spec = make_spec(101, (2, 3, 5, 7), 4)
        assert hb_reconstruct(spec, 1, N, J).tuples == direct


def test_reconstruction_empty_window():
    # period 6 and N = 2: both n in [2, 4) share a factor with t
    rng = random.Random(1)
    while True:
        spec = make_spec(13, O.random_matrix(rng, 13), rng.randrange(13))
        if spec.period == 6:
            break
    rep = hb_reconstruct(spec, 1, 2, 2)
    assert rep.rhs == 0 and rep.ok


def test_reconstruction_budget():
    spec = make_spec(101, (2, 3, 5, 7), 4)
    with pytest.raises(BudgetExceededError):
        hb_reconstruct(spec, 1, 128, 3, budget=100)


def test_box_regime():
    assert box_regime(DyadicVector(2, 2, (8, 8), (1, 1)), 1000, 100, 0.1, 1) == "bilinear"
    assert box_regime(DyadicVector(2, 1, (1,), (512,)), 1000, 100, 0.5, 1) == "long"
    assert box_regime(DyadicVector(3, 3, (1, 1, 1), (16, 16, 4)), 1000, 27, 0.01, 1) == "multiple"
    assert box_regime(DyadicVector(3, 3, (1, 1, 1), (2, 2, 2)), 1000, 27, 0.01, 1) == "remaining"
