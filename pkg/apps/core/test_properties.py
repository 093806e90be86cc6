"""Property-based tests for command-line parsing helpers."""
import pytest
from hypothesis import given, settings, strategies as st

from apps.core.commands import exit_code, parse_size, parse_sizes, USAGE_ERROR
from apps.core.exceptions import InvalidSizeError

sides = st.integers(min_value=1, max_value=10_000)


@given(height=sides, width=sides, separator=st.sampled_from(['x', 'X', '*']))
@settings(deadline=None, max_examples=200)
def test_size_text_round_trips(height, width, separator):
    assert parse_size(f'{height}{separator}{width}') == (height, width)


@given(sizes=st.lists(st.tuples(sides, sides), min_size=1, max_size=8))
@settings(deadline=None, max_examples=100)
def test_size_lists_keep_order(sizes):
    assert parse_sizes(','.join(f'{h}x{w}' for h, w in sizes)) == sizes


@given(text=st.text(alphabet='abcxyz -_,.', max_size=12))
@settings(deadline=None, max_examples=200)
def test_malformed_sizes_are_usage_errors(text):
    with pytest.raises(InvalidSizeError) as info:
        parse_size(text)
    assert exit_code(info.value) == USAGE_ERROR
