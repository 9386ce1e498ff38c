import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairlens.fairness import degenerate_parity, wer_parity


def test_table1_medium_row_is_fair():
    v = wer_parity(0.079, 0.088, 0.25, "female", "male")
    assert v.ratio == pytest.approx(1.1139, abs=1e-4)
    assert v.fair and v.marker == ""
    assert (v.group_high, v.group_low) == ("male", "female")


def test_table2_cells():
    v = wer_parity(0.515, 0.402, 0.25)
    assert v.ratio == pytest.approx(1.2811, abs=1e-4)
    assert not v.fair and v.marker == "≠"
    v = wer_parity(0.686, 0.466, 0.25)
    assert v.ratio == pytest.approx(1.4721, abs=1e-4) and not v.fair


def test_equal_groups_and_boundary():
    assert wer_parity(0.3, 0.3, 0.1).ratio == 1.0
    assert wer_parity(0.3, 0.3, 0.1).fair
    assert wer_parity(0.5, 0.25, 1.0).fair  # ratio exactly 2 = 1 + 1


def test_errors():
    for a, b, eps in ((0.0, 0.1, 0.25), (-0.1, 0.1, 0.25), (0.1, 0.1, 0.0), (0.1, 0.1, -1)):
        with pytest.raises(ValueError):
            wer_parity(a, b, eps)


def test_degenerate_helper():
    assert degenerate_parity(0.0, 0.0, 0.25, "a", "b").fair
    v = degenerate_parity(0.0, 0.1, 0.25, "a", "b")
    assert not v.fair and v.ratio == math.inf and v.group_high == "b"


wers = st.floats(1e-4, 5.0)
eps = st.floats(1e-3, 2.0)


@given(wers, wers, eps)
def test_symmetry(a, b, e):
    x, y = wer_parity(a, b, e), wer_parity(b, a, e)
    assert x.ratio == y.ratio and x.fair == y.fair
    assert x.ratio >= 1 and x.fair == (x.ratio <= 1 + e) and (x.marker == "≠") == (not x.fair)


@given(wers, wers, eps, st.floats(0.01, 100))
def test_scale_invariance(a, b, e, c):
    x, y = wer_parity(a, b, e), wer_parity(a * c, b * c, e)
    assert y.ratio == pytest.approx(x.ratio, rel=1e-12)
    if abs(x.ratio - (1 + e)) > 1e-9:
        assert x.fair == y.fair


@given(wers, wers, eps, st.floats(0, 2))
def test_monotone_in_epsilon(a, b, e, extra):
    if wer_parity(a, b, e).fair:
        assert wer_parity(a, b, e + extra).fair
