import numpy as np
import pytest

from motbench import io
from motbench.matching import (DistanceMode, ModeError, coverage,
                               match_sequence, pair_value, passes_gate)

MODE_2D = DistanceMode.iou2d()
MODE_3D = DistanceMode.euclid3d()


def track(track_id, positions, top=100.0, w=10.0, h=10.0):
    """Trajectory from {frame: left} with fixed-size boxes on one row."""
    t = io.Trajectory(track_id)
    for frame, left in positions.items():
        t.entries[frame] = io.MotEntry(frame=frame, id=track_id, bb_left=left,
                                       bb_top=top, bb_width=w, bb_height=h, conf=1.0)
    return t


def track3d(track_id, points):
    """Trajectory from {frame: (x, y)} world positions; boxes are dummies."""
    t = io.Trajectory(track_id)
    for frame, (x, y) in points.items():
        t.entries[frame] = io.MotEntry(frame=frame, id=track_id, bb_left=1.0,
                                       bb_top=1.0, bb_width=5.0, bb_height=5.0,
                                       conf=1.0, x=x, y=y, z=0.0)
    return t


class TestBasics:
    def test_perfect_tracking(self):
        gt = [track(1, {f: 100.0 + 4 * f for f in range(1, 7)}),
              track(2, {f: 300.0 for f in range(1, 7)})]
        hyp = [track(10 + t.id, {f: e.bb_left for f, e in t.entries.items()})
               for t in gt]
        log = match_sequence(gt, hyp, MODE_2D)
        assert log.fp == 0 and log.fn == 0 and log.idsw == 0 and log.fm == 0
        assert log.num_matches == 12
        for t in gt:
            assert log.tracked_frames[t.id] == set(range(1, 7))

    def test_no_hypotheses_at_all(self):
        gt = [track(1, {1: 100.0, 2: 104.0, 3: 108.0})]
        log = match_sequence(gt, [], MODE_2D)
        assert log.fn == 3 and log.fp == 0 and log.idsw == 0
        assert log.num_matches == 0 and log.fm == 0

    def test_gate_boundary_overlap_passes(self):
        # 10x10 against 10x5 in the same corner: overlap exactly 0.5
        gt = [track(1, {1: 100.0}, h=10.0)]
        hyp = [track(5, {1: 100.0}, h=5.0)]
        value = pair_value(gt[0].entries[1], hyp[0].entries[1], MODE_2D)
        assert value == 0.5
        log = match_sequence(gt, hyp, MODE_2D)
        assert log.num_matches == 1 and log.fn == 0

    def test_gate_boundary_distance_passes(self):
        gt = [track3d(1, {1: (0.0, 0.0)})]
        hyp = [track3d(9, {1: (1.0, 0.0)})]
        log = match_sequence(gt, hyp, MODE_3D)
        assert log.num_matches == 1
        assert log.frames[0].matches[0][2] == 1.0

    def test_3d_needs_world_points(self):
        gt = [track3d(1, {1: (0.0, 0.0)})]
        bad = io.Trajectory(2)
        bad.entries[1] = io.MotEntry(frame=1, id=2, bb_left=1, bb_top=1,
                                     bb_width=5, bb_height=5, conf=1.0)
        with pytest.raises(ModeError) as err:
            match_sequence(gt, [bad], MODE_3D)
        assert "frame 1" in str(err.value) and "id 2" in str(err.value)

    def test_relabeling_hypotheses_changes_no_counts(self):
        rng = np.random.default_rng(5)
        gt = [track(i, {f: 100.0 * i + 3 * f + rng.uniform(-2, 2)
                        for f in range(1, 9)}) for i in (1, 2, 3)]
        hyp = [track(i + 10, {f: 100.0 * i + 3 * f + rng.uniform(-3, 3)
                              for f in range(2, 8)}) for i in (1, 2, 3)]
        log = match_sequence(gt, hyp, MODE_2D)
        relabeled = []
        mapping = {11: 71, 12: 33, 13: 55}
        for t in hyp:
            nt = io.Trajectory(mapping[t.id])
            for f, e in t.entries.items():
                nt.entries[f] = io.MotEntry(frame=f, id=mapping[t.id],
                                            bb_left=e.bb_left, bb_top=e.bb_top,
                                            bb_width=e.bb_width, bb_height=e.bb_height,
                                            conf=1.0)
            relabeled.append(nt)
        log2 = match_sequence(gt, relabeled, MODE_2D)
        assert (log.fp, log.fn, log.idsw, log.fm) == (log2.fp, log2.fn, log2.idsw, log2.fm)


class TestCarryover:
    def test_previous_match_kept_over_closer_hypothesis(self):
        gt = [track(1, {1: 100.0, 2: 100.0})]
        keeper = track(1, {1: 100.0, 2: 102.0})   # still gated at frame 2
        closer = track(2, {2: 100.0})             # exact overlap at frame 2
        log = match_sequence(gt, [keeper, closer], MODE_2D)
        frame2 = log.frames[1]
        assert frame2.matches == [(1, 1, pytest.approx(8 / 12))]
        assert frame2.fp_ids == [2]
        assert log.idsw == 0

    def test_carryover_broken_when_gate_fails(self):
        gt = [track(1, {1: 100.0, 2: 100.0})]
        drifter = track(1, {1: 100.0, 2: 108.0})  # iou 2/18 at frame 2
        log = match_sequence(gt, [drifter], MODE_2D)
        assert log.frames[1].fn_ids == [1]
        assert log.frames[1].fp_ids == [1]


class TestFigureFixtures:
    """The four canonical assignment scenarios, rebuilt box by box."""

    def fixture_a(self):
        gt = [track(1, {f: 100.0 + 4 * (f - 1) for f in range(1, 7)})]
        red = track(1, {1: 100.0, 2: 104.0, 3: 108.0, 4: 108.0, 5: 108.0, 6: 108.0})
        blue = track(2, {1: 124.0, 2: 122.0, 3: 120.0, 4: 112.0, 5: 116.0, 6: 120.0})
        return gt, [red, blue]

    def test_a_single_id_switch_at_takeover(self):
        gt, hyp = self.fixture_a()
        log = match_sequence(gt, hyp, MODE_2D)
        assert log.idsw == 1
        (switch_frame,) = [f.frame for f in log.frames if f.idsw_ids]
        assert switch_frame == 4
        assert log.fn == 0 and log.fm == 0
        assert log.fp == 6  # blue while red holds the target, then red after

    def test_b_fragmentation_at_frame_3_and_reacquisition_switch(self):
        gt = [track(1, {f: 100.0 for f in range(1, 7)})]
        red = track(1, {1: 100.0, 2: 100.0})
        blue = track(2, {4: 100.0, 5: 100.0, 6: 100.0})
        log = match_sequence(gt, [red, blue], MODE_2D)
        assert log.fm == 1
        assert log.fragmentations == [(1, 3)]
        assert log.idsw == 1
        assert [f.frame for f in log.frames if f.idsw_ids] == [4]
        assert log.fn == 1 and log.fp == 0

    def test_c_propagated_assignment_5_fn_4_fp_no_fragmentation(self):
        gt1 = track(1, {f: 100.0 + 4 * (f - 1) for f in range(1, 7)})
        gt2 = track(2, {f: 120.0 - 4 * (f - 1) for f in range(1, 7)})
        hyp_a = track(1, {1: 100.0, 2: 104.0, 3: 104.0, 4: 104.0, 5: 104.0, 6: 104.0})
        hyp_b = track(2, {f: 121.0 - 4 * (f - 1) for f in range(1, 6)})
        log = match_sequence([gt1, gt2], [hyp_a, hyp_b], MODE_2D)
        assert log.fn == 5
        assert log.fp == 4
        assert log.fm == 0
        assert log.idsw == 0
        assert log.num_matches == 7
        # frame 5: hyp A overlaps gt2 exactly, but the carried-over pair wins
        frame5 = log.frames[4]
        assert (2, 2) in [(g, h) for g, h, _ in frame5.matches]
        assert frame5.fp_ids == [1]

    def test_d_interrupted_target_fragmentation_and_switch_at_frame_5(self):
        gt = [track(1, {1: 100.0, 2: 100.0, 3: 100.0, 5: 100.0, 6: 100.0})]
        red = track(1, {1: 100.0, 2: 100.0, 3: 100.0})
        blue = track(2, {4: 100.0, 5: 100.0, 6: 100.0})
        log = match_sequence(gt, [red, blue], MODE_2D)
        assert log.fm == 1
        assert log.idsw == 1
        assert [f.frame for f in log.frames if f.idsw_ids] == [5]
        assert log.fp == 1  # blue in frame 4, where the target is absent
        assert log.fn == 0


class TestCoverage:
    def test_fully_tracked(self):
        gt = [track(1, {f: 100.0 for f in range(1, 6)})]
        hyp = [track(9, {f: 100.0 for f in range(1, 6)})]
        log = match_sequence(gt, hyp, MODE_2D)
        (record,) = coverage(log, gt)
        assert record.tracked_frames == record.life_span == 5
        assert record.fragment_count == 0

    def test_single_gap(self):
        gt = [track(1, {f: 100.0 for f in range(1, 6)})]
        hyp = [track(9, {1: 100.0, 2: 100.0, 4: 100.0, 5: 100.0})]
        log = match_sequence(gt, hyp, MODE_2D)
        (record,) = coverage(log, gt)
        assert record.tracked_frames == 4
        assert record.fragment_count == 1

    def test_alternating_gaps(self):
        gt = [track(1, {f: 100.0 for f in range(1, 6)})]
        hyp = [track(9, {1: 100.0, 3: 100.0, 5: 100.0})]
        log = match_sequence(gt, hyp, MODE_2D)
        (record,) = coverage(log, gt)
        assert record.tracked_frames == 3
        assert record.fragment_count == 2

    def test_identity_change_does_not_fragment(self):
        gt = [track(1, {f: 100.0 for f in range(1, 5)})]
        hyp = [track(7, {1: 100.0, 2: 100.0}), track(8, {3: 100.0, 4: 100.0})]
        log = match_sequence(gt, hyp, MODE_2D)
        (record,) = coverage(log, gt)
        assert record.fragment_count == 0
        assert record.tracked_frames == 4
        assert log.idsw == 1

    def test_never_matched_target(self):
        gt = [track(1, {f: 100.0 for f in range(1, 4)})]
        log = match_sequence(gt, [], MODE_2D)
        (record,) = coverage(log, gt)
        assert record.tracked_frames == 0 and record.fragment_count == 0


class TestEventDump:
    def test_csv_contains_every_event(self):
        gt = [track(1, {1: 100.0, 2: 100.0, 4: 100.0})]
        hyp = [track(3, {1: 100.0, 3: 100.0, 4: 100.0})]
        log = match_sequence(gt, hyp, MODE_2D)
        text = log.to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "frame,kind,gt_id,hyp_id,value"
        kinds = [line.split(",")[1] for line in lines[1:]]
        assert kinds.count("MATCH") == log.num_matches
        assert kinds.count("FP") == log.fp
        assert kinds.count("FN") == log.fn


# ---------------------------------------------------------------------------
# oracle equivalence: the per-frame assignment step against exhaustive search

def oracle_overlap(a, b):
    ax2, ay2 = a.bb_left + a.bb_width, a.bb_top + a.bb_height
    bx2, by2 = b.bb_left + b.bb_width, b.bb_top + b.bb_height
    iw = min(ax2, bx2) - max(a.bb_left, b.bb_left)
    ih = min(ay2, by2) - max(a.bb_top, b.bb_top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.bb_width * a.bb_height + b.bb_width * b.bb_height - inter)


def oracle_value(g, h, mode):
    if mode.is_3d:
        return ((g.x - h.x) ** 2 + (g.y - h.y) ** 2 + (g.z - h.z) ** 2) ** 0.5
    return oracle_overlap(g, h)


def oracle_gated(value, mode):
    return value <= mode.threshold if mode.is_3d else value >= mode.threshold


def oracle_assignment(gts, hyps, mode):
    """All gated matchings by brute force: most pairs first, then best total.

    Returns (pairs as (gt index, hyp index, value), count, total dissimilarity).
    """
    gated = []
    for i, g in enumerate(gts):
        row = []
        for j, h in enumerate(hyps):
            v = oracle_value(g, h, mode)
            if oracle_gated(v, mode):
                row.append((j, v, v if mode.is_3d else 1.0 - v))
        gated.append(row)

    used = [False] * len(hyps)
    best = {"key": (0, 0.0), "pairs": []}

    def rec(i, count, cost, pairs):
        if i == len(gts):
            if (-count, cost) < (-best["key"][0], best["key"][1]):
                best["key"] = (count, cost)
                best["pairs"] = list(pairs)
            return
        rec(i + 1, count, cost, pairs)
        for j, v, d in gated[i]:
            if not used[j]:
                used[j] = True
                pairs.append((i, j, v))
                rec(i + 1, count + 1, cost + d, pairs)
                pairs.pop()
                used[j] = False

    rec(0, 0, 0.0, [])
    return best["pairs"], best["key"][0], best["key"][1]


def oracle_match_sequence(gt, hyp, mode):
    """Independent re-implementation of the whole per-frame protocol."""
    frames = sorted({f for t in gt for f in t.entries} |
                    {f for t in hyp for f in t.entries})
    prev, last_known = {}, {}
    events = []
    for frame in frames:
        gt_here = {t.id: t.entries[frame] for t in gt if frame in t.entries}
        hyp_here = {t.id: t.entries[frame] for t in hyp if frame in t.entries}
        matched = {}
        for g in sorted(prev):
            h = prev[g]
            if g in gt_here and h in hyp_here and oracle_gated(
                    oracle_value(gt_here[g], hyp_here[h], mode), mode):
                matched[g] = h
        free_g = sorted(g for g in gt_here if g not in matched)
        free_h = sorted(h for h in hyp_here if h not in matched.values())
        pairs, count, cost = oracle_assignment(
            [gt_here[g] for g in free_g], [hyp_here[h] for h in free_h], mode)
        idsw = []
        for i, j, v in pairs:
            g, h = free_g[i], free_h[j]
            matched[g] = h
            if g in last_known and last_known[g] != h:
                idsw.append(g)
        for g, h in matched.items():
            last_known[g] = h
        events.append({
            "frame": frame,
            "new_count": count,
            "new_cost": cost,
            "matched": dict(matched),
            "fn": sorted(g for g in gt_here if g not in matched),
            "fp": sorted(h for h in hyp_here if h not in matched.values()),
            "idsw": sorted(idsw),
            "gt_present": len(gt_here),
            "hyp_present": len(hyp_here),
        })
        prev = matched
    return events


def random_instance(rng, mode):
    """Persistent random-walk targets with noisy hypothesis copies."""
    n_frames = int(rng.integers(2, 11))
    n_gt = int(rng.integers(1, 7))
    n_hyp = int(rng.integers(0, 7))
    gt = []
    for i in range(1, n_gt + 1):
        if mode.is_3d:
            pos = rng.uniform(0, 8, 2)
            t = io.Trajectory(i)
            for f in range(1, n_frames + 1):
                pos = pos + rng.normal(0, 0.4, 2)
                t.entries[f] = io.MotEntry(frame=f, id=i, bb_left=1, bb_top=1,
                                           bb_width=5, bb_height=5, conf=1.0,
                                           x=float(pos[0]), y=float(pos[1]), z=0.0)
        else:
            left = rng.uniform(0, 60)
            t = io.Trajectory(i)
            for f in range(1, n_frames + 1):
                left += rng.normal(0, 2.0)
                t.entries[f] = io.MotEntry(frame=f, id=i, bb_left=float(left),
                                           bb_top=100.0, bb_width=10.0,
                                           bb_height=10.0, conf=1.0)
        gt.append(t)
    hyp = []
    for k in range(1, n_hyp + 1):
        src = gt[int(rng.integers(0, n_gt))]
        start = int(rng.integers(1, n_frames + 1))
        end = int(rng.integers(start, n_frames + 1))
        t = io.Trajectory(100 + k)
        for f in range(start, end + 1):
            e = src.entries[f]
            if mode.is_3d:
                t.entries[f] = io.MotEntry(
                    frame=f, id=100 + k, bb_left=1, bb_top=1, bb_width=5,
                    bb_height=5, conf=1.0,
                    x=e.x + float(rng.normal(0, 0.6)),
                    y=e.y + float(rng.normal(0, 0.6)), z=0.0)
            else:
                t.entries[f] = io.MotEntry(
                    frame=f, id=100 + k, bb_left=e.bb_left + float(rng.normal(0, 3.0)),
                    bb_top=100.0, bb_width=10.0, bb_height=10.0, conf=1.0)
        if t.entries:
            hyp.append(t)
    return gt, hyp


def check_instance(gt, hyp, mode):
    log = match_sequence(gt, hyp, mode)
    expected = oracle_match_sequence(gt, hyp, mode)
    assert len(log.frames) == len(expected)
    prev_pairs: set = set()
    for got, want in zip(log.frames, expected):
        assert got.frame == want["frame"]
        got_pairs = {(g, h) for g, h, _ in got.matches}
        assert got_pairs == set(want["matched"].items())
        assert got.fn_ids == want["fn"]
        assert got.fp_ids == want["fp"]
        assert got.idsw_ids == want["idsw"]
        # conservation per frame
        assert len(got.matches) + len(got.fn_ids) == want["gt_present"]
        assert len(got.matches) + len(got.fp_ids) == want["hyp_present"]
        # the fresh-assignment step must hit the exhaustive optimum exactly;
        # a pair is fresh iff it was not the match of the previous frame
        new = [(g, h, v) for g, h, v in got.matches if (g, h) not in prev_pairs]
        new_cost = sum(v if mode.is_3d else 1.0 - v for _, _, v in new)
        assert len(new) == want["new_count"]
        assert new_cost == pytest.approx(want["new_cost"], abs=1e-9)
        prev_pairs = got_pairs
    return log


def test_assignment_matches_bruteforce_2d():
    rng = np.random.default_rng(2024)
    for _ in range(300):
        gt, hyp = random_instance(rng, MODE_2D)
        check_instance(gt, hyp, MODE_2D)


def test_assignment_matches_bruteforce_3d():
    rng = np.random.default_rng(7312)
    for _ in range(200):
        gt, hyp = random_instance(rng, MODE_3D)
        check_instance(gt, hyp, MODE_3D)


def test_global_conservation_invariants():
    rng = np.random.default_rng(13)
    for _ in range(100):
        gt, hyp = random_instance(rng, MODE_2D)
        log = match_sequence(gt, hyp, MODE_2D)
        assert log.num_matches + log.fn == log.gt_boxes
        assert log.num_matches + log.fp == log.hyp_boxes
        assert log.gt_boxes == sum(len(t.entries) for t in gt)
        assert log.hyp_boxes == sum(len(t.entries) for t in hyp)


def test_every_match_passes_the_gate():
    rng = np.random.default_rng(99)
    for _ in range(100):
        gt, hyp = random_instance(rng, MODE_2D)
        log = match_sequence(gt, hyp, MODE_2D)
        for f in log.frames:
            for _, _, value in f.matches:
                assert passes_gate(value, MODE_2D)
