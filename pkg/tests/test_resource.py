import pytest
from hypothesis import given, strategies as st

from cv2x_sps.resource import (GridConfig, SubchannelId, WindowIndex, same_subframe_set,
                               subframe_of_time)


def test_defaults():
    g = GridConfig()
    assert (g.F, g.S, g.window_ms, g.window_s) == (1, 100, 100, 0.1)


@pytest.mark.parametrize("kw", [dict(num_sub_bands=0), dict(subchannels_per_band=50),
                                dict(cam_rate_hz=5.0)])
def test_inconsistent_grid_rejected(kw):
    with pytest.raises(ValueError):
        GridConfig(**kw)


def test_subchannel_one_based():
    with pytest.raises(ValueError):
        SubchannelId(0, 5)
    with pytest.raises(ValueError):
        SubchannelId(1, 0)
    assert SubchannelId(1, 2) < SubchannelId(2, 1)


def test_grid_check():
    g = GridConfig(num_sub_bands=2)
    g.check(SubchannelId(2, 100))
    with pytest.raises(ValueError):
        g.check(SubchannelId(3, 1))
    with pytest.raises(ValueError):
        g.check(SubchannelId(1, 101))


def test_window_index():
    w = WindowIndex(3)
    assert w.next() == 4 and isinstance(w.next(), WindowIndex)
    assert w.start_ms(GridConfig()) == 300
    with pytest.raises(ValueError):
        WindowIndex(-1)


@given(st.integers(0, 10**7))
def test_subframe_of_time_roundtrip(t):
    g = GridConfig()
    w, k = subframe_of_time(t, g)
    assert 1 <= k <= 100
    assert w.start_ms(g) + k - 1 == t


def test_subframe_of_time_edges():
    g = GridConfig()
    assert subframe_of_time(0, g) == (0, 1)
    assert subframe_of_time(99, g) == (0, 100)
    assert subframe_of_time(100, g) == (1, 1)
    with pytest.raises(ValueError):
        subframe_of_time(-1, g)


@given(st.integers(1, 3), st.integers(1, 100))
def test_same_subframe_set(F, k):
    s = same_subframe_set(k, GridConfig(num_sub_bands=F))
    assert len(s) == F
    assert {c.subframe for c in s} == {k}
    assert {c.sub_band for c in s} == set(range(1, F + 1))


def test_same_subframe_set_range():
    with pytest.raises(ValueError):
        same_subframe_set(101, GridConfig())
