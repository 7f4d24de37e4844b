import json

import pytest
from hypothesis import given
import hypothesis.strategies as st

from dpcr.changelog import (
    AtMostK,
    Changelog,
    ConsistencyError,
    DuplicateEntryError,
    Hybrid,
    Mutation,
    NEG_INF,
    TimeBounded,
    TimeRangeFilter,
    adjacent_changelog,
    apply_mutations,
    delete,
    dump_changelog,
    insert,
    load_changelog,
    modify,
    snapshot_at,
    validate_constraint,
    without_entry,
)

from conftest import changelogs


class TestApplyMutations:
    def test_single_insertion(self):
        assert apply_mutations({}, [insert("x", 1, 50.0)]) == {"x": 50.0}

    def test_value_change(self):
        assert apply_mutations({"x": 50.0}, [modify("x", 2, 50.0, 100.0)]) == {"x": 100.0}

    def test_deletion_empties(self):
        assert apply_mutations({"x": 100.0}, [delete("x", 3, 100.0)]) == {}

    def test_input_snapshot_unchanged(self):
        before = {"x": 50.0}
        apply_mutations(before, [modify("x", 2, 50.0, 100.0)])
        assert before == {"x": 50.0}

    def test_rejects_mismatched_prev_value(self):
        with pytest.raises(ConsistencyError, match="#1"):
            apply_mutations({}, [insert("x", 1, 5.0), modify("x", 2, 6.0, 7.0)])

    def test_rejects_insertion_of_present_entry(self):
        with pytest.raises(ConsistencyError, match="insertion"):
            apply_mutations({"x": 1.0}, [insert("x", 4, 2.0)])


class TestMutation:
    def test_rejects_null_to_null(self):
        with pytest.raises(ConsistencyError):
            Mutation(1, "x", None, None)

    def test_insertion_and_deletion_flags(self):
        assert insert("x", 1, 2.0).is_insertion
        assert delete("x", 1, 2.0).is_deletion
        assert not modify("x", 1, 1.0, 2.0).is_insertion


class TestChangelogValidation:
    def test_rejects_unsorted(self):
        with pytest.raises(ConsistencyError, match="out of order"):
            Changelog([insert("x", 5, 1.0), insert("y", 1, 1.0)])

    def test_rejects_duplicate_entry_time(self):
        with pytest.raises(ConsistencyError, match="out of order"):
            Changelog([insert("x", 1, 1.0), Mutation(1, "x", 1.0, 2.0)])

    def test_rejects_chain_starting_with_modification(self):
        with pytest.raises(ConsistencyError, match="expected an insertion"):
            Changelog([modify("x", 1, 1.0, 2.0)])

    def test_rejects_broken_chain(self):
        with pytest.raises(ConsistencyError, match="does not match"):
            Changelog([insert("x", 1, 1.0), modify("x", 2, 9.0, 2.0)])

    def test_rejects_second_insertion_without_deletion(self):
        with pytest.raises(ConsistencyError):
            Changelog([insert("x", 1, 1.0), insert("x", 2, 2.0)])

    def test_reinsertion_after_deletion(self):
        log = Changelog([insert("x", 1, 1.0), delete("x", 2, 1.0), insert("x", 3, 5.0)])
        assert snapshot_at(log, 3) == {"x": 5.0}

    def test_ties_sort_by_entry_id(self):
        log = Changelog.from_unsorted([insert("b", 1, 2.0), insert("a", 1, 1.0)])
        assert [m.entry_id for m in log] == ["a", "b"]


class TestFilter:
    def test_half_open_boundary(self):
        log = Changelog.from_unsorted(
            [insert("a", 1, 1.0), insert("b", 2, 1.0), insert("c", 3, 1.0)]
        )
        got = log.filter(TimeRangeFilter(1, 3))
        assert [m.time for m in got] == [2, 3]

    def test_unbounded_start(self):
        log = Changelog.from_unsorted([insert("a", -10, 1.0), insert("b", 4, 1.0)])
        assert len(log.filter(TimeRangeFilter(NEG_INF, 4))) == 2

    def test_disjoint_filters_partition(self):
        log = Changelog.from_unsorted([insert("a", 1, 1.0), insert("b", 2, 1.0)])
        first = log.filter(TimeRangeFilter(0, 1))
        second = log.filter(TimeRangeFilter(1, 2))
        assert [m.time for m in first] == [1]
        assert [m.time for m in second] == [2]

    @given(changelogs(), st.lists(st.integers(0, 24), min_size=2, max_size=6, unique=True))
    def test_consecutive_filters_partition_span(self, log, ticks):
        ticks = sorted(ticks)
        filters = [TimeRangeFilter(a, b) for a, b in zip(ticks, ticks[1:])]
        pieces = [m for f in filters for m in log.filter(f)]
        direct = log.filter(TimeRangeFilter(ticks[0], ticks[-1]))
        assert sorted(pieces, key=lambda m: (m.time, m.entry_id)) == list(direct)

    @given(changelogs(), st.integers(0, 24), st.integers(0, 24))
    def test_snapshot_equals_incremental_fold(self, log, t_mid, t_end):
        t_mid, t_end = min(t_mid, t_end), max(t_mid, t_end)
        direct = snapshot_at(log, t_end)
        staged = apply_mutations(
            snapshot_at(log, t_mid),
            log.filter(TimeRangeFilter(t_mid, t_end)) if t_mid < t_end else (),
        )
        assert staged == direct


class TestAdjacent:
    def base(self):
        return Changelog.from_unsorted([insert("a", 1, 1.0), modify("a", 5, 1.0, 2.0)])

    def test_merges_sorted(self):
        merged = adjacent_changelog(self.base(), [insert("b", 3, 9.0)])
        assert [m.entry_id for m in merged] == ["a", "b", "a"]

    def test_length_arithmetic(self):
        muts = [insert("b", 2, 1.0), modify("b", 3, 1.0, 2.0), delete("b", 4, 2.0)]
        merged = adjacent_changelog(self.base(), muts)
        assert len(merged) == len(self.base()) + 3

    def test_round_trip(self):
        merged = adjacent_changelog(self.base(), [insert("b", 3, 9.0)])
        assert without_entry(merged, "b") == self.base()

    def test_duplicate_entry_rejected(self):
        with pytest.raises(DuplicateEntryError):
            adjacent_changelog(self.base(), [insert("a", 9, 1.0)])

    def test_entry_set_hamming_distance_is_one(self):
        merged = adjacent_changelog(self.base(), [insert("b", 3, 9.0)])
        assert set(merged.entry_ids()) - set(self.base().entry_ids()) == {"b"}


class TestConstraints:
    def test_at_most_k_boundary(self):
        log = Changelog.from_unsorted([insert("x", 0, 1.0), modify("x", 4, 1.0, 2.0)])
        assert validate_constraint(log, AtMostK(2)) == {"x": True}
        assert validate_constraint(log, AtMostK(1)) == {"x": False}

    def test_time_bounded_boundary(self):
        log = Changelog.from_unsorted([insert("x", 0, 1.0), modify("x", 5, 1.0, 2.0)])
        assert validate_constraint(log, TimeBounded(4)) == {"x": False}
        assert validate_constraint(log, TimeBounded(5)) == {"x": True}

    def test_hybrid_passes_if_any_branch_passes(self):
        muts = [insert("x", 0, 1.0), modify("x", 3, 1.0, 2.0), modify("x", 8, 2.0, 3.0)]
        log = Changelog.from_unsorted(muts)
        hybrid = Hybrid((AtMostK(1), TimeBounded(10)))
        assert validate_constraint(log, hybrid) == {"x": True}
        assert validate_constraint(log, Hybrid((AtMostK(1), TimeBounded(2)))) == {"x": False}

    def test_deletion_counts_as_mutation(self):
        log = Changelog.from_unsorted([insert("x", 0, 1.0), delete("x", 9, 1.0)])
        assert validate_constraint(log, TimeBounded(8)) == {"x": False}

    def test_hybrid_requires_branches(self):
        with pytest.raises(ValueError):
            Hybrid(())


class TestJsonl:
    def test_round_trip(self, tmp_path):
        log = Changelog.from_unsorted(
            [insert("a", 1, 1.5), modify("a", 3, 1.5, 2.0), delete("a", 7, 2.0)]
        )
        path = tmp_path / "log.jsonl"
        dump_changelog(log, path)
        assert load_changelog(path) == log

    def test_loader_rejects_unsorted(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        lines = [
            {"entry": "a", "t": 5, "prev": None, "new": 1.0},
            {"entry": "b", "t": 1, "prev": None, "new": 1.0},
        ]
        path.write_text("\n".join(json.dumps(l) for l in lines))
        with pytest.raises(ConsistencyError, match="out of order"):
            load_changelog(path)

    def test_loader_rejects_bad_record(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"entry": "a", "t": 5, "prev": "oops", "new": 1.0}\n')
        with pytest.raises(ConsistencyError, match="bad.jsonl:1"):
            load_changelog(path)
