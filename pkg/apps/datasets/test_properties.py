"""Property-based tests for capping, grouping and batch planning."""
from pathlib import Path

from hypothesis import given, settings, strategies as st

from apps.datasets.batching import BatchPlan
from apps.datasets.records import ImageRecord, ResolutionCensus, ResolutionGroup, cap_resize, group_by_resolution

dims = st.integers(min_value=1, max_value=4096)
caps = st.integers(min_value=16, max_value=512)


@given(width=dims, height=dims, max_size=caps)
@settings(deadline=None, max_examples=1000)
def test_cap_is_idempotent(width, height, max_size):
    once = cap_resize(width, height, max_size)
    assert cap_resize(*once, max_size) == once


@given(width=dims, height=dims, max_size=caps)
@settings(deadline=None, max_examples=1000)
def test_cap_bounds_long_side_and_keeps_aspect(width, height, max_size):
    new_width, new_height = cap_resize(width, height, max_size)
    longest, shortest = max(width, height), min(width, height)
    new_longest, new_shortest = max(new_width, new_height), min(new_width, new_height)
    assert new_longest == min(longest, max_size)
    assert new_shortest >= 1
    if width > height:
        assert new_width >= new_height
    if width < height:
        assert new_width <= new_height
    # short side is rounded, so the ratio moves by at most one pixel's worth
    assert abs(new_shortest / new_longest - shortest / longest) <= 1 / new_longest


@given(sizes=st.lists(st.tuples(st.integers(1, 300), st.integers(1, 300)), min_size=1, max_size=80), max_size=caps)
@settings(deadline=None, max_examples=200)
def test_groups_partition_records(sizes, max_size):
    records = [ImageRecord(Path(f'{i}.png'), w, h) for i, (w, h) in enumerate(sizes)]
    groups = group_by_resolution(records, max_size)
    members = [record for group in groups for record in group.records]
    assert sorted(members, key=lambda r: r.path.name) == sorted(records, key=lambda r: r.path.name)
    for group in groups:
        assert all(cap_resize(r.width, r.height, max_size) == (group.width, group.height) for r in group.records)
    assert len({(g.width, g.height) for g in groups}) == len(groups)


@given(
    sizes=st.lists(st.sampled_from([(16, 16), (24, 16), (16, 24), (32, 20)]), min_size=1, max_size=60),
    batch_size=st.integers(1, 9),
)
@settings(deadline=None, max_examples=200)
def test_plan_serves_every_member_once(sizes, batch_size):
    records = [ImageRecord(Path(f'{i}.png'), w, h) for i, (w, h) in enumerate(sizes)]
    groups = group_by_resolution(records, 128)
    plan = BatchPlan.build(groups, batch_size)
    served = []
    for group_index, start in plan.batches:
        served.extend(groups[group_index].records[start:start + batch_size])
    assert sorted(r.path.name for r in served) == sorted(r.path.name for r in records)


@given(members=st.lists(st.integers(1, 40), min_size=1, max_size=8), batch_size=st.integers(1, 9))
@settings(deadline=None, max_examples=300)
def test_plan_is_round_robin_fair(members, batch_size):
    groups = []
    for index, count in enumerate(members):
        records = [ImageRecord(Path(f'{index}_{i}.png'), 16 + index, 16) for i in range(count)]
        groups.append(ResolutionGroup(16 + index, 16, 128, records))
    plan = BatchPlan.build(groups, batch_size)
    needed = [group.batch_count(batch_size) for group in groups]
    assert len(plan) == sum(needed)

    served = [0] * len(groups)
    visits = []
    for group_index, start in plan.batches:
        assert start == served[group_index] * batch_size
        served[group_index] += 1
        visits.append((served[group_index], group_index))
        unfinished = [served[i] for i in range(len(groups)) if served[i] < needed[i]]
        if unfinished:
            assert max(unfinished) - min(unfinished) <= 1
    # round k serves the k-th batch of every group that still has one, in group order
    assert visits == sorted(visits)
    assert served == needed


@given(counts=st.dictionaries(st.tuples(st.integers(1, 50), st.integers(1, 50)), st.integers(1, 1000), min_size=1))
@settings(deadline=None, max_examples=200)
def test_census_identities_hold(counts):
    census = ResolutionCensus.from_counts(counts)
    assert census.identity_errors(tolerance=1e-9) == []
    assert census.total_images == sum(counts.values())
