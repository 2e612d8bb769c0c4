"""Clash detection versus a brute-force minute-grid oracle."""

import random

from krs.domain import Day, MeetingTime, Section
from krs.timetable import meetings_overlap, section_conflicts

from oracles import minute_grid_overlap, minute_grid_pairs

DAYS = list(Day)


def random_meeting(rng: random.Random) -> MeetingTime:
    start = rng.randrange(0, 1410)
    length = rng.randrange(1, min(300, 1440 - start) + 1)
    return MeetingTime(rng.choice(DAYS), start, start + length)


def mk_section(sid, meetings, term="20072", course="C1"):
    return Section(sid, course, "01", term, capacity=10, meetings=tuple(meetings))


def non_overlapping_meetings(rng, count):
    """Meetings that are legal inside one section (pairwise clash-free)."""
    out = []
    tries = 0
    while len(out) < count and tries < 200:
        tries += 1
        cand = random_meeting(rng)
        if all(not minute_grid_overlap(cand, m) for m in out):
            out.append(cand)
    return out


class TestMeetingsOverlap:
    def test_back_to_back_is_not_a_clash(self):
        a = MeetingTime(Day.MON, 7 * 60, 9 * 60)
        b = MeetingTime(Day.MON, 9 * 60, 11 * 60)
        assert meetings_overlap(a, b) is False

    def test_different_days_never_clash(self):
        a = MeetingTime(Day.MON, 7 * 60, 9 * 60)
        b = MeetingTime(Day.TUE, 7 * 60, 9 * 60)
        assert meetings_overlap(a, b) is False

    def test_agrees_with_minute_grid_oracle(self):
        rng = random.Random(20080225)
        for _ in range(12_000):
            a, b = random_meeting(rng), random_meeting(rng)
            assert meetings_overlap(a, b) == minute_grid_overlap(a, b), (a, b)

    def test_symmetric(self):
        rng = random.Random(3)
        for _ in range(2_000):
            a, b = random_meeting(rng), random_meeting(rng)
            assert meetings_overlap(a, b) == meetings_overlap(b, a)

    def test_every_meeting_overlaps_itself(self):
        rng = random.Random(4)
        for _ in range(500):
            a = random_meeting(rng)
            assert meetings_overlap(a, a)


class TestSectionConflicts:
    def test_empty_active_list(self):
        cand = mk_section("cand", [MeetingTime(Day.MON, 420, 540)])
        assert section_conflicts(cand, []) == []

    def test_identical_section_pairs_each_meeting_with_itself(self):
        meetings = [MeetingTime(Day.MON, 420, 540), MeetingTime(Day.THU, 420, 540)]
        cand = mk_section("cand", meetings)
        twin = mk_section("held", meetings)
        hits = section_conflicts(cand, [twin])
        assert len(hits) == len(meetings)
        assert all(h.candidate_meeting == h.active_meeting for h in hits)

    def test_matches_minute_grid_pair_set(self):
        rng = random.Random(42)
        for _ in range(300):
            cand = mk_section("cand", non_overlapping_meetings(rng, rng.randint(1, 3)))
            active = [
                mk_section(f"s{i}", non_overlapping_meetings(rng, rng.randint(1, 3)))
                for i in range(rng.randint(0, 6))
            ]
            got = {(h.section_id, h.candidate_meeting, h.active_meeting)
                   for h in section_conflicts(cand, active)}
            assert got == minute_grid_pairs(cand, active)

    def test_order_stable_under_active_permutation(self):
        rng = random.Random(99)
        cand = mk_section("cand", non_overlapping_meetings(rng, 3))
        active = [mk_section(f"s{i}", non_overlapping_meetings(rng, 2)) for i in range(5)]
        reference = section_conflicts(cand, active)
        for _ in range(20):
            rng.shuffle(active)
            assert section_conflicts(cand, active) == reference

    def test_output_sorted_by_section_then_day_then_start(self):
        cand = mk_section("cand", [MeetingTime(Day.MON, 420, 600), MeetingTime(Day.TUE, 420, 600)])
        active = [
            mk_section("s2", [MeetingTime(Day.TUE, 430, 500)]),
            mk_section("s1", [MeetingTime(Day.MON, 500, 560), MeetingTime(Day.TUE, 430, 500)]),
        ]
        hits = section_conflicts(cand, active)
        keys = [(h.section_id, h.candidate_meeting.sort_key, h.active_meeting.sort_key)
                for h in hits]
        assert keys == sorted(keys)
        assert [h.section_id for h in hits] == ["s1", "s1", "s2"]
