import hypothesis.strategies as st
from hypothesis import settings

from dpcr.changelog import Changelog, Mutation

settings.register_profile("ci", max_examples=60, deadline=None)
settings.load_profile("ci")


@st.composite
def changelogs(draw, max_entries: int = 6, horizon: int = 24):
    """Random consistent changelogs: per-entry chains merged and sorted."""
    n_entries = draw(st.integers(0, max_entries))
    muts: list[Mutation] = []
    for i in range(n_entries):
        eid = f"e{i:03d}"
        times = sorted(draw(st.sets(st.integers(0, horizon), min_size=1, max_size=5)))
        values = draw(
            st.lists(
                st.floats(0, 100, allow_nan=False, width=32),
                min_size=len(times),
                max_size=len(times),
            )
        )
        ends_deleted = draw(st.booleans()) and len(times) > 1
        prev = None
        for j, (t, v) in enumerate(zip(times, values)):
            new = None if (ends_deleted and j == len(times) - 1) else float(v)
            muts.append(Mutation(t, eid, prev, new))
            prev = new
    return Changelog.from_unsorted(muts)
