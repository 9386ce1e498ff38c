import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairlens.segment import SpeakerTurn, plan_parts, split_turn


def test_examples():
    assert plan_parts(42) == [21.0, 21.0]
    assert plan_parts(30) == [30.0]
    assert plan_parts(90) == [30.0, 30.0, 30.0]
    parts = plan_parts(61)
    # n = 1 gives 61 s and n = 2 gives 30.5 s, both over the cap
    assert 61 / 1 > 30 and 61 / 2 > 30 and 61 / 3 <= 30
    assert len(parts) == 3 and parts[0] == pytest.approx(20.333, abs=1e-3)


def test_errors():
    with pytest.raises(ValueError):
        plan_parts(0)
    with pytest.raises(ValueError):
        plan_parts(-3)
    with pytest.raises(ValueError):
        SpeakerTurn("s", 5.0, 5.0)


def test_split_turn_examples():
    assert split_turn(SpeakerTurn("s", 10.0, 52.0)).parts == ((10.0, 31.0), (31.0, 52.0))
    assert split_turn(SpeakerTurn("s", 0, 5)).parts == ((0.0, 5.0),)
    parts = split_turn(SpeakerTurn("s", 0, 61)).parts
    assert parts == ((0.0, 20.333), (20.333, 40.666), (40.666, 61.0))


@settings(max_examples=500, deadline=None)
@given(st.floats(0.001, 600), st.floats(0, 3600), st.sampled_from([30.0, 10.0, 29.97]))
def test_split_turn_properties(duration, start, cap):
    turn = SpeakerTurn("s", start, start + duration)
    parts = split_turn(turn, cap).parts
    lengths = [b - a for a, b in parts]
    assert parts[0][0] == round(turn.start_s, 3) and parts[-1][1] == round(turn.end_s, 3)
    assert all(parts[k][1] == parts[k + 1][0] for k in range(len(parts) - 1))
    assert max(lengths) <= cap + 0.001 + 1e-9
    assert max(lengths) - min(lengths) <= 0.001 + 1e-9
    assert len(parts) == len(plan_parts(duration, cap))
