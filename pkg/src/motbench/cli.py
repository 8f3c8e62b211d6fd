"""Command-line entry point.

Subcommands:

    eval      score one tracker's results against ground truth
    rank      build an average-rank leaderboard from saved reports
    track     run the reference flow tracker over detection files
    tune      randomized parameter search on a training set
    audit     pedestrian speed statistics for 3D calibration checks
    validate  format check of a result bundle, no ground truth needed

Data layout: a root directory holds one "<Sequence-Name>.txt" per sequence,
optionally accompanied by "<Sequence-Name>.info" (key=value metadata) and
"<Sequence-Name>.homography" (9 numbers, row-major). A sequence map file
lists one sequence name per line. Reports are written as an aligned text
table, a key=value document, a per-sequence CSV breakdown and, unless
--no-figures is given, rendered figures.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import audit as audit_mod
from . import io, metrics, ranking, tracker, tuner
from .geometry import Homography
from .matching import DistanceMode


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def atomic_write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)
    return path


def _mode_from_args(args) -> DistanceMode:
    if args.mode == "3d":
        return DistanceMode.euclid3d(args.threshold if args.threshold else 1.0)
    return DistanceMode.iou2d(args.threshold if args.threshold else 0.5)


def _load_side_data(root: Path, names: list[str]):
    metas = {}
    for name in names:
        meta = io.load_sequence_meta(root, name)
        if meta is not None:
            metas[name] = meta
    return metas


def _homography_for(root: Path, name: str) -> Homography | None:
    path = root / f"{name}.homography"
    return Homography.load(path) if path.exists() else None


# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    seqmap = io.load_seqmap(args.seqmap)
    mode = _mode_from_args(args)
    gt_root = Path(args.gt)
    try:
        gt_bundle = io.load_result_bundle(gt_root, io.EntryRole.GROUND_TRUTH, seqmap)
        res_bundle = io.load_result_bundle(args.res, io.EntryRole.RESULT, seqmap)
    except (io.FormatError, io.MissingSequenceError) as exc:
        return _fail(str(exc))
    metas = _load_side_data(gt_root, seqmap)

    gt = {name: gt_bundle[name] for name in seqmap}
    try:
        if mode.is_3d:
            for name in seqmap:
                metrics.check_3d_available(gt[name], name)
                metrics.check_3d_available(res_bundle[name], name)
        report = metrics.evaluate_benchmark(
            gt, res_bundle, mode, name=args.name, metas=metas,
            runtime_hz=args.hz, jobs=args.jobs)
    except (metrics.UndefinedMetricError, io.FormatError) as exc:
        return _fail(str(exc))

    out = Path(args.out)
    text = metrics.report_to_text(report)
    atomic_write(out / "report.txt", text)
    atomic_write(out / "report.kv", metrics.report_to_kv(report))
    atomic_write(out / "breakdown.csv", metrics.breakdown_to_csv(report))
    if args.events:
        for name in seqmap:
            counts = metrics.evaluate_sequence(gt[name], res_bundle[name],
                                               mode, name, metas.get(name))
            atomic_write(out / f"{name}.events.csv", counts.log.to_csv())
    if args.figures:
        from . import plots
        plots.mota_by_sequence(report, out / "mota_by_sequence.png")
    if args.format == "kv":
        print(metrics.report_to_kv(report), end="")
    else:
        print(text, end="")
    return 0


def cmd_rank(args) -> int:
    if len(args.reports) < 2:
        return _fail("ranking needs at least two report files")
    reports = []
    for path in args.reports:
        try:
            report = metrics.report_from_kv(Path(path).read_text())
        except (OSError, KeyError, ValueError) as exc:
            return _fail(f"{path}: {exc}")
        reports.append((report.name, report))
    metric_set = tuple(args.metrics.split(",")) if args.metrics else ranking.DEFAULT_METRICS
    try:
        table = ranking.average_rank(reports, metric_set)
    except (ranking.MissingMetric, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    atomic_write(out / "leaderboard.txt", table.to_text())
    atomic_write(out / "leaderboard.kv", table.to_kv())
    if args.figures:
        from . import plots
        plots.rank_chart(table, out / "leaderboard.png")
    print(table.to_text(), end="")
    return 0


def cmd_track(args) -> int:
    seqmap = io.load_seqmap(args.seqmap)
    try:
        params = tracker.TrackerParams.load(args.params) if args.params \
            else tracker.TrackerParams()
        det_bundle = io.load_result_bundle(args.det, io.EntryRole.DETECTION, seqmap)
    except (io.FormatError, io.MissingSequenceError, ValueError) as exc:
        return _fail(str(exc))
    det_root = Path(args.det)

    def run(name: str):
        h = _homography_for(det_root, name) if args.world else None
        trajectories = tracker.track(det_bundle[name], params, homography=h)
        return name, tracker.trajectories_to_entries(trajectories)

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(run, seqmap))
    else:
        outputs = [run(name) for name in seqmap]
    for name, entries in sorted(outputs):
        io.write_result_file(args.out, name, entries)
        print(f"{name}: {len(entries)} entries, "
              f"{len({e.id for e in entries})} trajectories")
    return 0


def cmd_tune(args) -> int:
    seqmap = io.load_seqmap(args.seqmap)
    try:
        defaults = tracker.TrackerParams.load(args.defaults) if args.defaults \
            else tracker.TrackerParams()
        det = io.load_result_bundle(args.det, io.EntryRole.DETECTION, seqmap)
        gt = io.load_result_bundle(args.gt, io.EntryRole.GROUND_TRUTH, seqmap)
        config = tuner.SearchConfig(defaults=defaults, runs=args.runs, seed=args.seed)
        best_params, best_mota, runs = tuner.tune(
            {n: det[n] for n in seqmap}, {n: gt[n] for n in seqmap}, config)
    except (io.FormatError, io.MissingSequenceError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    atomic_write(out / "best_params.txt", best_params.to_kv())
    atomic_write(out / "search_log.csv", tuner.search_log_to_csv(runs))
    print(f"best run: MOTA {best_mota:.1f} over {len(runs)} runs")
    print(best_params.to_kv(), end="")
    return 0


def cmd_audit(args) -> int:
    seqmap = io.load_seqmap(args.seqmap)
    gt_root = Path(args.gt)
    try:
        gt_bundle = io.load_result_bundle(gt_root, io.EntryRole.GROUND_TRUTH, seqmap)
    except (io.FormatError, io.MissingSequenceError) as exc:
        return _fail(str(exc))
    metas = _load_side_data(gt_root, seqmap)
    out = Path(args.out)
    status = 0
    for name in seqmap:
        meta = metas.get(name)
        fps = meta.fps if meta else args.fps
        if fps is None:
            status = _fail(f"{name}: no fps in sidecar metadata and no --fps given")
            continue
        homography = _homography_for(gt_root, name)
        entries = io.active_entries(gt_bundle[name])
        if homography is None and not any(e.has_world_point for e in entries):
            status = _fail(f"{name}: no world coordinates and no homography file")
            continue
        trajectories = io.build_trajectories(entries)
        profile = audit_mod.profile_sequence(trajectories, fps, homography)
        outliers = audit_mod.flag_outliers(profile, args.speed_limit)
        atomic_write(out / f"{name}.speed_hist.csv",
                     audit_mod.histogram_to_csv(profile, args.bin_width))
        atomic_write(out / f"{name}.mean_speeds.csv",
                     audit_mod.mean_speeds_to_csv(profile))
        atomic_write(out / f"{name}.outliers.csv",
                     audit_mod.outliers_to_csv(outliers))
        if args.figures:
            from . import plots
            plots.speed_histogram(profile, out / f"{name}.speed_hist.png", name,
                                  args.bin_width)
            plots.mean_speed_per_pedestrian(profile, out / f"{name}.mean_speeds.png",
                                            name)
            plots.speed_map(profile, out / f"{name}.speed_map.png", name)
        print(f"{name}: {len(profile.samples)} speed samples, "
              f"{len(outliers)} above {args.speed_limit:g} m/s")
    return status


def cmd_validate(args) -> int:
    seqmap = io.load_seqmap(args.seqmap)
    root = Path(args.res)
    failures = 0
    for name in seqmap:
        path = root / f"{name}.txt"
        if not path.exists():
            print(f"{name}: FAIL missing file {path}")
            failures += 1
            continue
        try:
            entries = io.read_mot_path(path, io.EntryRole.RESULT)
        except io.FormatError as exc:
            print(f"{name}: FAIL {exc}")
            failures += 1
            continue
        print(f"{name}: OK ({len(entries)} entries)")
    if failures:
        print(f"{failures} of {len(seqmap)} sequences failed validation")
    return 1 if failures else 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motbench",
        description="Multi-object tracking benchmark toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seqmap", required=True, help="sequence list, one name per line")
        p.add_argument("--jobs", type=int, default=1, help="parallel sequences")

    p = sub.add_parser("eval", help="evaluate tracking results")
    add_common(p)
    p.add_argument("--gt", required=True, help="ground truth directory")
    p.add_argument("--res", required=True, help="results directory or zip")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--mode", choices=("2d", "3d"), default="2d")
    p.add_argument("--threshold", type=float, default=None,
                   help="gate override: overlap ratio (2d) or meters (3d)")
    p.add_argument("--name", default="tracker", help="tracker name in reports")
    p.add_argument("--hz", type=float, default=None,
                   help="self-declared tracker speed in frames per second")
    p.add_argument("--format", choices=("text", "kv"), default="text")
    p.add_argument("--events", action="store_true", help="dump per-event CSVs")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="leaderboard from saved report.kv files")
    p.add_argument("reports", nargs="+", help="report.kv files")
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", default=None,
                   help="comma-separated metric subset (default: the ten standard ones)")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("track", help="run the reference flow tracker")
    add_common(p)
    p.add_argument("--det", required=True, help="detections directory")
    p.add_argument("--out", required=True, help="directory for result files")
    p.add_argument("--params", default=None, help="key=value parameter file")
    p.add_argument("--world", action="store_true",
                   help="fill world coordinates via per-sequence homography files")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("tune", help="randomized parameter search")
    add_common(p)
    p.add_argument("--det", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--defaults", default=None, help="key=value defaults file")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("audit", help="speed statistics for calibration checks")
    add_common(p)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fps", type=float, default=None,
                   help="fallback when a sequence has no .info sidecar")
    p.add_argument("--speed-limit", type=float, default=audit_mod.OUTLIER_SPEED)
    p.add_argument("--bin-width", type=float, default=audit_mod.DEFAULT_BIN_WIDTH)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("validate", help="format-check a result bundle")
    add_common(p)
    p.add_argument("--res", required=True)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
