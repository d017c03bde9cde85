import numpy as np
import pytest
from hypothesis import given, strategies as st

from cv2x_sps.metrics import (PowerCdfAccumulator, PrrAccumulator, accumulate, ecdf_at,
                              loss_breakdown, power_cdf, prr_values)
from cv2x_sps.reception import Outcome, ReceptionBatch, ReceptionRecord
from cv2x_sps.resource import SubchannelId, WindowIndex

D, HD, P, I = (Outcome.DECODED, Outcome.LOST_HALF_DUPLEX, Outcome.LOST_PROPAGATION,
               Outcome.LOST_INTERFERENCE)


def records(groups, window=0):
    """groups: list of (distance, [outcome per copy])."""
    out = []
    for n, (dist, outs) in enumerate(groups):
        for f, o in enumerate(outs, start=1):
            out.append(ReceptionRecord(f"t{n}", "r", SubchannelId(f, 1 + n), WindowIndex(window),
                                       dist, -80.0, None if o == HD else 5.0, o))
    return out


def batch(groups, window=0):
    dist = np.array([g[0] for g in groups], dtype=float)
    outs = np.array([[int(o) for o in g[1]] for g in groups], dtype=np.int8)
    L, F = outs.shape
    return ReceptionBatch(WindowIndex(window), ("a", "b"), np.zeros(L, int), np.ones(L, int),
                          dist, np.zeros(L), np.ones((L, F), int), np.zeros((L, F)), outs)


F2_CASES = [
    (40.0, [D, I]),    # decoded through the replica
    (40.0, [HD, I]),   # cci wins over half-duplex
    (120.0, [HD, P]),  # propagation over half-duplex
    (120.0, [HD, HD]),
    (260.0, [P, I]),   # cci over propagation
    (310.0, [D, D]),   # beyond the last bin: ignored
]


def test_hand_counted_f2_cumulative():
    acc = accumulate(PrrAccumulator(), records(F2_CASES))
    # bins 50..300; cumulative: a message counts in every D_x >= its distance
    assert acc.service_messages.tolist() == [2, 2, 4, 4, 4, 5]
    assert acc.service_successes.tolist() == [1, 1, 1, 1, 1, 1]
    assert acc.raw_attempts.tolist() == [4, 4, 8, 8, 8, 10]
    assert acc.raw_successes.tolist() == [1, 1, 1, 1, 1, 1]
    assert acc.service_losses[-1].tolist() == [2, 1, 1]   # cci, prop, hd
    assert acc.raw_losses[-1].tolist() == [1, 4, 2, 3]     # by Outcome
    v = prr_values(acc)[-1]
    assert v["prr_service"] == pytest.approx(1 / 5)
    assert v["prr_raw"] == pytest.approx(1 / 10)
    lb = loss_breakdown(acc)[-1]
    assert (lb["loss_cci"], lb["loss_prop"], lb["loss_hd"]) == pytest.approx((0.4, 0.2, 0.2))


def test_annulus_bins():
    acc = accumulate(PrrAccumulator(cumulative=False), records(F2_CASES))
    assert acc.service_messages.tolist() == [2, 0, 2, 0, 0, 1]
    v = prr_values(acc)
    assert v[1]["prr_service"] is None and v[1]["prr_raw"] is None


def test_batch_and_records_paths_agree():
    a = accumulate(PrrAccumulator(), records(F2_CASES))
    b = accumulate(PrrAccumulator(), batch(F2_CASES))
    assert a == b


def test_records_group_by_window():
    # the same (tx, rx) pair in two windows is two messages
    recs = records([(10.0, [D])], window=0) + records([(10.0, [I])], window=1)
    acc = accumulate(PrrAccumulator(), recs)
    assert acc.service_messages[0] == 2 and acc.service_successes[0] == 1


def test_f1_raw_equals_service():
    groups = [(30.0, [D]), (30.0, [I]), (90.0, [HD]), (200.0, [P])]
    acc = accumulate(PrrAccumulator(), batch(groups))
    for v in prr_values(acc):
        assert v["prr_raw"] == v["prr_service"]


outcome_rows = st.lists(
    st.tuples(st.floats(0, 350), st.lists(st.sampled_from(list(Outcome)), min_size=2,
                                          max_size=2)),
    min_size=1, max_size=40)


@given(outcome_rows)
def test_service_dominates_raw_and_closes(groups):
    acc = accumulate(PrrAccumulator(), batch(groups))
    for v, lb in zip(prr_values(acc), loss_breakdown(acc)):
        if v["prr_service"] is None:
            continue
        assert v["prr_service"] >= v["prr_raw"]
        total = v["prr_service"] + lb["loss_cci"] + lb["loss_prop"] + lb["loss_hd"]
        assert total == pytest.approx(1.0, abs=1e-9)


@given(outcome_rows, outcome_rows, outcome_rows)
def test_merge_associative_and_commutative(a, b, c):
    A, B, C = (accumulate(PrrAccumulator(), batch(g)) for g in (a, b, c))
    assert A.merge(B).merge(C) == A.merge(B.merge(C))
    assert A.merge(B) == B.merge(A)
    assert A.merge(B) == accumulate(accumulate(PrrAccumulator(), batch(a)), batch(b))


def test_merge_rejects_mismatch():
    with pytest.raises(ValueError):
        PrrAccumulator().merge(PrrAccumulator(bins=(100.0,)))
    with pytest.raises(ValueError):
        PrrAccumulator(bins=(100.0, 50.0))


def test_power_cdf():
    cdf = power_cdf([1.0, 2.0, 3.0])
    assert cdf == [(1.0, pytest.approx(1 / 3)), (2.0, pytest.approx(2 / 3)), (3.0, 1.0)]
    acc = PowerCdfAccumulator()
    acc.add([3.0, 1.0])
    acc.add(2.0)
    assert dict(power_cdf(acc))[2.0] == pytest.approx(2 / 3)
    assert ecdf_at([1.0, 2.0, 3.0], [0.5, 2.0, 9.0]).tolist() == pytest.approx([0, 2 / 3, 1])
    with pytest.raises(ValueError):
        acc.add(np.inf)
    with pytest.raises(ValueError):
        power_cdf([])


@given(st.lists(st.floats(0, 1e6), min_size=1, max_size=50))
def test_power_cdf_is_a_cdf(xs):
    cdf = power_cdf(xs)
    vals = [v for v, _ in cdf]
    probs = [p for _, p in cdf]
    assert vals == sorted(set(vals))
    assert all(b > a for a, b in zip(probs, probs[1:]))
    assert probs[-1] == 1.0
