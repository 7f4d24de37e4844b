import mpmath
import pytest
from hypothesis import given
import hypothesis.strategies as st

from dpcr.accounting import (
    Advanced,
    HdcrParams,
    HeterogeneousAdvancedError,
    PrivacyLoss,
    ReleaseSchedule,
    SwcrParams,
    affected_query_count,
    compose,
    compose_fold,
    dcr_bound,
    dcr_folds,
    hdcr_bound,
    hdcr_folds,
    hdcr_time_bounded_nominal_folds,
    local_bound,
    local_folds,
    most_span,
    sup,
    swcr_bound,
    swcr_folds,
)
from dpcr.changelog import AtMostK, Hybrid, TimeBounded, insert, modify
from dpcr.oracles import most_span_oracle

LOSS = PrivacyLoss(0.1, 1e-6)


class TestPrivacyLoss:
    def test_validation(self):
        with pytest.raises(ValueError):
            PrivacyLoss(-0.1, 0.0)
        with pytest.raises(ValueError):
            PrivacyLoss(0.1, 1.5)

    def test_partial_order(self):
        assert PrivacyLoss(0.2, 0.1).covers(PrivacyLoss(0.1, 0.1))
        assert not PrivacyLoss(0.2, 0.0).covers(PrivacyLoss(0.1, 0.1))

    def test_sup_is_componentwise_max(self):
        got = sup([PrivacyLoss(0.2, 0.0), PrivacyLoss(0.1, 0.5)])
        assert got == PrivacyLoss(0.2, 0.5)


class TestCompose:
    def test_naive_linear_sum(self):
        got = compose([LOSS] * 3)
        assert got.epsilon == pytest.approx(0.3)
        assert got.delta == pytest.approx(3e-6)

    def test_nested_composition_flattens(self):
        inner = compose([LOSS] * 2)
        outer = compose([inner, compose([LOSS] * 3)])
        assert outer == compose([LOSS] * 5)

    def test_advanced_matches_high_precision_oracle(self):
        got = compose([PrivacyLoss(0.1, 0.0)] * 10, Advanced(1e-6))
        with mpmath.workdps(50):
            eps = mpmath.mpf("0.1")
            expected = eps * mpmath.sqrt(2 * 10 * mpmath.log(10**6)) + 10 * eps * (
                mpmath.exp(eps) - 1
            )
        assert got.epsilon == pytest.approx(float(expected), rel=1e-12)
        assert got.delta == pytest.approx(1e-6)

    def test_advanced_rejects_heterogeneous(self):
        with pytest.raises(HeterogeneousAdvancedError):
            compose([PrivacyLoss(0.1), PrivacyLoss(0.2)], Advanced(1e-6))

    def test_empty_composition_rejected(self):
        with pytest.raises(ValueError):
            compose([])

    def test_zero_folds_cost_nothing(self):
        assert compose_fold(LOSS, 0) == PrivacyLoss(0.0, 0.0)

    @given(
        st.lists(
            st.tuples(st.floats(0, 2, allow_nan=False), st.floats(0, 0.01, allow_nan=False)),
            min_size=1,
            max_size=6,
        ),
        st.floats(0, 1, allow_nan=False),
    )
    def test_naive_composition_is_monotone(self, pairs, extra_eps):
        losses = [PrivacyLoss(e, d) for e, d in pairs]
        base = compose(losses)
        widened = compose(losses + [PrivacyLoss(extra_eps, 0.0)])
        assert widened.covers(base)


class TestMostSpan:
    def test_unit_spacing(self):
        assert most_span((0, 1, 2, 3), 1) == 2

    def test_single_endpoint(self):
        assert most_span((5,), 7) == 0

    @pytest.mark.parametrize("interval,bound", [(1, 1), (3, 7), (5, 5)])
    def test_uniform_matches_ceil_formula(self, interval, bound):
        ticks = tuple(range(0, interval * 40, interval))
        expected = -(-bound // interval) + 1
        assert most_span(ticks, bound) == expected
        assert most_span_oracle(ticks, bound) == expected

    @given(
        st.lists(st.integers(1, 9), min_size=1, max_size=40),
        st.integers(0, 50),
    )
    def test_matches_quadratic_oracle(self, gaps, span):
        ticks = [0]
        for g in gaps:
            ticks.append(ticks[-1] + g)
        assert most_span(tuple(ticks), span) == most_span_oracle(ticks, span)


class TestDcrBound:
    SCHEDULE = ReleaseSchedule.uniform(7, 7, 20)

    def test_at_most_k(self):
        got = dcr_bound(self.SCHEDULE, PrivacyLoss(0.1), AtMostK(3))
        assert got.epsilon == pytest.approx(0.3)
        assert got.delta == 0.0

    def test_time_bounded_uniform(self):
        got = dcr_bound(self.SCHEDULE, PrivacyLoss(0.1), TimeBounded(14))
        assert got.epsilon == pytest.approx((14 // 7 + 1) * 0.1)

    def test_hybrid_is_componentwise_max_of_branches(self):
        # the zero-bound branch composes most_span(t, 0) = 2 folds under
        # the reference span procedure, which double-counts a point window
        hybrid = Hybrid((AtMostK(1), TimeBounded(0)))
        folds = most_span_oracle(self.SCHEDULE.ticks, 0)
        assert folds == 2
        got = dcr_bound(self.SCHEDULE, PrivacyLoss(0.1), hybrid)
        assert got == sup(
            [
                dcr_bound(self.SCHEDULE, PrivacyLoss(0.1), AtMostK(1)),
                dcr_bound(self.SCHEDULE, PrivacyLoss(0.1), TimeBounded(0)),
            ]
        )
        assert got.epsilon == pytest.approx(folds * 0.1)

    def test_hybrid_covers_every_branch(self):
        hybrid = Hybrid((AtMostK(4), TimeBounded(3)))
        got = dcr_bound(self.SCHEDULE, LOSS, hybrid)
        for branch in hybrid.branches:
            assert got.covers(dcr_bound(self.SCHEDULE, LOSS, branch))


class TestSwcrBound:
    def test_at_most_k(self):
        params = SwcrParams(window=14, period=7, first_release=14, count=10)
        got = swcr_bound(params, PrivacyLoss(0.05), AtMostK(2))
        assert swcr_folds(params, AtMostK(2)) == 4
        assert got.epsilon == pytest.approx(0.2)

    def test_time_bounded(self):
        params = SwcrParams(window=14, period=7, first_release=14, count=10)
        assert swcr_folds(params, TimeBounded(7)) == 3

    def test_tumbling_window(self):
        params = SwcrParams(window=7, period=7, first_release=7, count=10)
        assert swcr_folds(params, AtMostK(1)) == 1


class TestHdcrBound:
    def test_at_most_k(self):
        params = HdcrParams(height=3, branching=2, start=0, span=32, interval=1)
        got = hdcr_bound(params, PrivacyLoss(0.1), AtMostK(2))
        assert got.epsilon == pytest.approx(0.6)

    def test_single_layer_degenerates_to_dcr(self):
        params = HdcrParams(height=1, branching=2, start=0, span=16, interval=2)
        constraint = TimeBounded(5)
        assert hdcr_folds(params, constraint) == dcr_folds(
            params.layer_schedule(0), constraint
        )

    def test_time_bounded_sums_exact_layer_spans(self):
        params = HdcrParams(height=2, branching=2, start=0, span=4, interval=1)
        got = hdcr_bound(params, PrivacyLoss(0.1), TimeBounded(2))
        layer0 = most_span_oracle(params.layer_schedule(0).ticks, 2)
        layer1 = most_span_oracle(params.layer_schedule(1).ticks, 2)
        assert (layer0, layer1) == (3, 2)
        assert got.epsilon == pytest.approx(0.5)

    def test_nominal_closed_form_differs_from_exact(self):
        # the closed-form layer term can dip below the true per-layer span
        params = HdcrParams(height=2, branching=2, start=0, span=4, interval=1)
        nominal = hdcr_time_bounded_nominal_folds(params, 1)
        assert nominal == pytest.approx(3.5)
        assert hdcr_folds(params, TimeBounded(1)) == 4


class TestLocalBound:
    def test_doubles_dcr_at_most_k(self):
        schedule = ReleaseSchedule.uniform(5, 5, 10)
        folds = dcr_folds(schedule, AtMostK(2))
        got = local_bound(folds, PrivacyLoss(0.1))
        assert got.epsilon == pytest.approx(0.4)

    def test_swcr_tumbling(self):
        params = SwcrParams(window=7, period=7, first_release=7, count=10)
        assert local_folds(swcr_folds(params, AtMostK(1))) == 2

    def test_zero_folds(self):
        assert local_bound(0, PrivacyLoss(0.3, 0.1)) == PrivacyLoss(0.0, 0.0)


class TestAffectedQueryCount:
    def test_single_mutation_disjoint_filters(self):
        schedule = ReleaseSchedule.uniform(2, 2, 5)
        entry = [insert("x", 3, 1.0)]
        assert affected_query_count(entry, schedule.filters()) == 1

    def test_k_mutations_in_k_intervals(self):
        schedule = ReleaseSchedule.uniform(2, 2, 6)
        entry = [insert("x", 2, 1.0)] + [
            modify("x", 2 + 2 * i, 1.0, 1.0) for i in range(1, 4)
        ]
        assert affected_query_count(entry, schedule.filters()) == 4

    def test_empty_entry(self):
        schedule = ReleaseSchedule.uniform(2, 2, 5)
        assert affected_query_count([], schedule.filters()) == 0


class TestSchedules:
    def test_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            ReleaseSchedule((3, 3))

    def test_first_filter_is_unbounded(self):
        filters = ReleaseSchedule((4, 8)).filters()
        assert filters[0].start == float("-inf")
        assert filters[0].end == 4
        assert (filters[1].start, filters[1].end) == (4, 8)

    def test_hdcr_layer_geometry(self):
        params = HdcrParams(height=3, branching=2, start=10, span=10, interval=2)
        assert params.layer_size(0) == 5
        assert params.layer_size(1) == 3
        assert params.layer_size(2) == 2
        assert params.node_filter(1, 2).end == 20  # truncated at start + span
        assert params.layer_schedule(1).ticks == (10, 14, 18, 22)
