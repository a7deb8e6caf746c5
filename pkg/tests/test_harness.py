import pytest

from ptrmpc.harness import HarnessError, PartyConfig, decode_frame, encode_frame
from ptrmpc.shamir import SharedValue
from conftest import make_runtime


def run_script(rt):
    xs = [rt.dealer_share(v) for v in (3, -5, 7, 11)]
    a = rt.mul(xs[0], xs[1])
    b = rt.inner_product(xs, xs)
    c = rt.mul_many([(a, b), (xs[2], xs[3])])
    return [rt.signed(v) for v in rt.open_many(c)[0]]


def test_same_seed_same_transcript():
    digests = []
    for _ in range(2):
        rt = make_runtime(seed=5)
        rt._digest = __import__("hashlib").sha256()
        out = run_script(rt)
        digests.append((out, rt.transcript_digest, rt.stats.snapshot()))
        rt.close()
    assert digests[0] == digests[1]
    assert digests[0][0] == [-15 * 204, 77]


def test_different_seed_same_outputs_different_shares():
    r1, r2 = make_runtime(seed=1), make_runtime(seed=2)
    assert run_script(r1) == run_script(r2)
    assert r1.dealer_share(9).shares != r2.dealer_share(9).shares


def test_independent_ops_in_a_batch_share_a_round():
    rt = make_runtime()
    a, b = rt.dealer_share(2), rt.dealer_share(3)
    with rt.batch():
        x = rt.mul(a, b)
        y = rt.mul(a, a)
    assert rt.stats.rounds == 1 and rt.stats.interactive_ops == 2
    z = rt.mul(x, y)  # depends on both
    assert rt.stats.rounds == 2
    assert rt.reveal(z) == 24


def test_without_batch_ops_are_sequential():
    rt = make_runtime()
    a, b = rt.dealer_share(2), rt.dealer_share(3)
    rt.mul(a, b)
    rt.mul(a, a)
    assert rt.stats.rounds == 2


def test_dependent_ops_inside_a_batch_still_take_depth():
    rt = make_runtime()
    a = rt.dealer_share(2)
    with rt.batch():
        x = a
        for _ in range(4):
            x = rt.mul(x, a)
    assert rt.stats.rounds == 4 and rt.reveal(x) == 32


def test_open_detects_inconsistent_shares():
    rt = make_runtime()
    v = rt.dealer_share(4)
    bad = SharedValue(list(v.shares), rt.p)
    bad.shares[2] = (bad.shares[2] + 1) % rt.p
    with pytest.raises(HarnessError):
        rt.open(bad)


def test_open_counts_one_op_per_value():
    rt = make_runtime()
    vals, rnd = rt.open_many([rt.dealer_share(v) for v in range(5)])
    assert vals == list(range(5)) and rnd == 1
    assert rt.stats.interactive_ops == 5 and rt.stats.rounds == 1
    assert all(b > 0 for b in rt.stats.bytes_per_party)


def test_public_operations_are_free():
    rt = make_runtime()
    assert rt.mul(3, 4) == 12
    assert rt.inner_product([1, 2], [3, 4]) == 11
    assert rt.stats.interactive_ops == 0 and rt.stats.rounds == 0


def test_dealer_bits_are_bits_with_fair_mean():
    rt = make_runtime(seed=9)
    bits = [rt.reveal(b) for b in rt.dealer_rand_bits(4000)]
    assert set(bits) <= {0, 1}
    assert abs(sum(bits) / len(bits) - 0.5) < 0.03
    assert rt.stats.dealer_values == 4000


def test_frame_round_trip():
    data = encode_frame(3, 7, 0, 2, [1, 2, 1 << 80], 11)
    (rnd, op, s, r), vals = decode_frame(data, 11)
    assert (rnd, op, s, r, vals) == (3, 7, 0, 2, [1, 2, 1 << 80])


def test_bad_config_rejected():
    with pytest.raises(Exception):
        PartyConfig(n=3, t=2)
    with pytest.raises(ValueError):
        PartyConfig(transport="udp")


def test_tcp_matches_inproc():
    results = []
    for transport in ("inproc", "tcp"):
        rt = make_runtime(seed=4, transport=transport)
        rt._digest = __import__("hashlib").sha256()
        out = run_script(rt)
        results.append((out, rt.stats.snapshot(), rt.transcript_digest))
        rt.close()
    assert results[0] == results[1]


def test_stats_json_has_fields():
    rt = make_runtime()
    rt.mul(rt.dealer_share(1), rt.dealer_share(1))
    rt.close()
    text = rt.stats.to_json()
    for key in ("interactive_ops", "rounds", "bytes_per_party", "wall_ms"):
        assert key in text
