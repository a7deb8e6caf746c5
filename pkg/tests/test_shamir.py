import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from ptrmpc.fieldcore import Field
from ptrmpc.shamir import (Share, SharingError, consistent_degree, lincomb, reconstruct, share,
                           share_poly)
from conftest import make_runtime


def test_hand_example_shares():
    f = Field(11)
    shares = share_poly([5, 3], 3, f)
    assert [(s.party_index, s.value.value) for s in shares] == [(1, 8), (2, 0), (3, 3)]


def test_hand_example_reconstruct():
    f = Field(11)
    got = reconstruct([Share(1, f(8)), Share(2, f(0))], 1, f)
    assert got == (2 * 8 - 1 * 0) % 11 == 5


def test_zero_polynomial():
    f = Field(11)
    assert all(s.value == 0 for s in share_poly([0, 0], 3, f))


def test_constant_shares_reconstruct_to_constant():
    f = Field(101)
    assert reconstruct([Share(i, f(42)) for i in (1, 2, 3)], 1, f) == 42


def test_threshold_checks():
    f = Field(11)
    rng = random.Random(0)
    with pytest.raises(SharingError):
        share(1, 3, 2, rng, f)
    with pytest.raises(SharingError):
        share(1, 2, 1, rng, f)


def test_reconstruct_errors():
    f = Field(11)
    with pytest.raises(SharingError):
        reconstruct([Share(1, f(8))], 1, f)
    with pytest.raises(SharingError):
        reconstruct([Share(1, f(8)), Share(1, f(8))], 1, f)


@pytest.mark.parametrize("n,t", [(3, 1), (5, 2), (7, 3)])
def test_round_trip_all_subsets(n, t):
    f = Field(2 ** 61 - 1)
    rng = random.Random(n)
    for _ in range(100):
        s = rng.randrange(f.p)
        shares = share(s, n, t, rng, f)
        for subset in itertools.combinations(shares, t + 1):
            assert reconstruct(subset, t, f) == s
        assert consistent_degree([x.value.value for x in shares], t, f.p)


@pytest.mark.parametrize("p", [7, 11, 13, 97])
def test_subset_agreement_exhaustive_small_fields(p):
    f = Field(p)
    for s in range(p):
        for c in range(p):
            shares = share_poly([s, c], 3, f)
            got = {reconstruct(sub, 1, f).value for sub in itertools.combinations(shares, 2)}
            assert got == {s}


def test_single_share_is_uniform():
    # privacy proxy: one share of a fixed secret over fresh sharings
    f = Field(7)
    rng = random.Random(3)
    counts = Counter(share(4, 3, 1, rng, f)[0].value.value for _ in range(7000))
    expected = 1000
    chi2 = sum((counts[v] - expected) ** 2 / expected for v in range(7))
    assert chi2 < 22.46  # 6 degrees of freedom, p = 0.001


def test_lincomb_is_local():
    rt = make_runtime()
    a, b = rt.dealer_share(5), rt.dealer_share(7)
    before = (rt.stats.interactive_ops, rt.stats.rounds)
    s = lincomb([(1, a), (1, b)], 0, rt.n, rt.p)
    z = lincomb([(0, a)], 9, rt.n, rt.p)
    assert rt.reveal(s) == 12 and rt.reveal(z) == 9
    assert (rt.stats.interactive_ops, rt.stats.rounds) == before


@pytest.mark.parametrize("p", [11, 13, 37, 97])
def test_mul_and_inner_product_exhaustive_small_fields(p):
    rt = make_runtime()
    rt.p = p  # small-field variant of the same protocol
    rt.field = Field(p)
    from ptrmpc.shamir import lagrange_at_zero
    rt._lag_full = lagrange_at_zero((1, 2, 3), p)
    for x in range(p):
        for y in range(0, p, max(1, p // 11)):
            a, b = rt.dealer_share(x), rt.dealer_share(y)
            m = rt.mul(a, b)
            assert rt.reveal(m) == x * y % p
            assert consistent_degree(m.shares, 1, p)
            ip = rt.inner_product([a, b], [b, a])
            assert rt.reveal(ip) == 2 * x * y % p


def test_mul_examples_and_counts(rt):
    a, b = rt.dealer_share(3), rt.dealer_share(4)
    ops, rounds = rt.stats.interactive_ops, rt.stats.rounds
    c = rt.mul(a, b)
    assert rt.reveal(c) == 12
    assert rt.stats.interactive_ops == ops + 1 and rt.stats.rounds == rounds + 1
    assert rt.reveal(rt.mul(a, rt.dealer_share(0))) == 0


def test_inner_product_examples(rt):
    xs = [rt.dealer_share(1), rt.dealer_share(2)]
    ys = [rt.dealer_share(3), rt.dealer_share(4)]
    assert rt.reveal(rt.inner_product(xs, ys)) == 11
    a, b = rt.dealer_share(6), rt.dealer_share(7)
    assert rt.reveal(rt.inner_product([a], [b])) == rt.reveal(rt.mul(a, b))
    with pytest.raises(ValueError):
        rt.inner_product(xs, ys[:1])


def test_inner_product_length_1000_one_op_one_round(rt):
    rng = random.Random(1)
    xv = [rng.randrange(1000) for _ in range(1000)]
    yv = [rng.randrange(1000) for _ in range(1000)]
    xs = [rt.dealer_share(v) for v in xv]
    ys = [rt.dealer_share(v) for v in yv]
    ops, rounds = rt.stats.interactive_ops, rt.stats.rounds
    r = rt.inner_product(xs, ys)
    assert rt.reveal(r) == sum(a * b for a, b in zip(xv, yv))
    assert rt.stats.interactive_ops == ops + 1 and rt.stats.rounds == rounds + 1


ints81 = st.integers(min_value=0, max_value=(1 << 81) - 1)


@given(ints81, ints81, st.integers(0, 1000))
def test_random_81_bit_mul(x, y, seed):
    rt = make_runtime(seed=seed)
    a, b = rt.dealer_share(x), rt.dealer_share(y)
    c = rt.mul(a, b)
    assert rt.reveal(c) == x * y % rt.p
    assert consistent_degree(c.shares, rt.t, rt.p)


@pytest.mark.parametrize("n,t", [(5, 2), (7, 3)])
def test_larger_party_counts(n, t):
    rt = make_runtime(n=n, t=t, seed=2)
    a, b, c = rt.dealer_share(11), rt.dealer_share(-4), rt.dealer_share(9)
    m = rt.mul_many([(a, b), (b, c)])
    assert [rt.signed(rt.reveal(v)) for v in m] == [-44, -36]
    assert all(consistent_degree(v.shares, t, rt.p) for v in m)
    assert rt.open(rt.inner_product([a, b], [c, c])) == (99 - 36) % rt.p
