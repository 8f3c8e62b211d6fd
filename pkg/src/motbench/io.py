"""Reading and writing the 10-field comma-separated tracking format.

Each line carries exactly ten numeric values:

    frame, id, bb_left, bb_top, bb_width, bb_height, conf, x, y, z

The same grammar serves three roles. In detection files the id is -1 and
conf is the raw detector score. In ground-truth and result files conf is a
0/1 flag; entries flagged 0 are parsed and kept but excluded from
evaluation. The last three values are world coordinates in meters, -1 when
unavailable. All pixel values are 1-based: the top-left corner is (1, 1).

Readers tolerate spaces around commas and CRLF line ends; the writer emits
bare commas, LF endings and the shortest decimal representation that
round-trips, so parse(write(parse(text))) == parse(text) field for field.
"""

from __future__ import annotations

import enum
import tempfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path


class FormatError(ValueError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ValidationError(FormatError):
    """Well-formed numbers that violate a field invariant."""


class MissingSequenceError(FileNotFoundError):
    def __init__(self, name: str, directory: Path | None = None):
        where = f" in {directory}" if directory else ""
        super().__init__(f"sequence {name!r} has no file{where}")
        self.sequence = name


class EntryRole(enum.Enum):
    DETECTION = "detection"
    GROUND_TRUTH = "ground_truth"
    RESULT = "result"


@dataclass(frozen=True)
class MotEntry:
    """One line of the 10-field format."""

    frame: int
    id: int
    bb_left: float
    bb_top: float
    bb_width: float
    bb_height: float
    conf: float
    x: float = -1.0
    y: float = -1.0
    z: float = -1.0

    @property
    def active(self) -> bool:
        """False only for ground-truth/result entries flagged out with conf 0."""
        return self.conf != 0

    @property
    def has_world_point(self) -> bool:
        return not (self.x == -1 and self.y == -1 and self.z == -1)

    def values(self) -> tuple[float, ...]:
        return (self.frame, self.id, self.bb_left, self.bb_top, self.bb_width,
                self.bb_height, self.conf, self.x, self.y, self.z)


FIELD_NAMES = ("frame", "id", "bb_left", "bb_top", "bb_width", "bb_height",
               "conf", "x", "y", "z")


def _validate(entry: MotEntry, role: EntryRole, line: int | None = None) -> None:
    if entry.frame < 1:
        raise ValidationError(f"frame must be >= 1, got {entry.frame}", line)
    if entry.bb_width <= 0:
        raise ValidationError(f"bb_width must be positive, got {entry.bb_width}", line)
    if entry.bb_height <= 0:
        raise ValidationError(f"bb_height must be positive, got {entry.bb_height}", line)
    if role is not EntryRole.DETECTION and entry.id == -1:
        raise ValidationError("id -1 is only allowed in detection files", line)
    if role is EntryRole.GROUND_TRUTH and entry.conf not in (0.0, 1.0):
        raise ValidationError(
            f"ground-truth conf acts as a 0/1 flag, got {entry.conf}", line)


def parse_mot_line(line: str, role: EntryRole, lineno: int | None = None) -> MotEntry:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != 10:
        raise FormatError(f"expected 10 comma-separated fields, got {len(fields)}", lineno)
    numbers = []
    for col, text in enumerate(fields):
        try:
            numbers.append(float(text))
        except ValueError:
            raise FormatError(
                f"field {col + 1} ({FIELD_NAMES[col]}): not a number: {text!r}",
                lineno) from None
    for col in (0, 1):
        if numbers[col] != int(numbers[col]):
            raise FormatError(
                f"field {col + 1} ({FIELD_NAMES[col]}): expected an integer, "
                f"got {fields[col]!r}", lineno)
    entry = MotEntry(int(numbers[0]), int(numbers[1]), *numbers[2:])
    _validate(entry, role, lineno)
    return entry


def parse_mot_file(text: str, role: EntryRole) -> list[MotEntry]:
    """Parse a whole file, returning entries sorted stably by (frame, id).

    Ground-truth entries with conf 0 are kept; callers exclude them from
    evaluation via :func:`active_entries`. Ground-truth and result files may
    not repeat a (frame, id) pair: each object belongs to one trajectory.
    """
    entries: list[MotEntry] = []
    seen: dict[tuple[int, int], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        entry = parse_mot_line(line, role, lineno)
        if role is not EntryRole.DETECTION:
            key = (entry.frame, entry.id)
            if key in seen:
                raise FormatError(
                    f"duplicate (frame, id) = {key}; first seen on line {seen[key]}",
                    lineno)
            seen[key] = lineno
        entries.append(entry)
    entries.sort(key=lambda e: (e.frame, e.id))
    return entries


def format_value(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def write_mot_file(entries: list[MotEntry]) -> str:
    """Serialize entries, one per line, LF-terminated, no spaces."""
    return "".join(",".join(format_value(v) for v in e.values()) + "\n" for e in entries)


def read_mot_path(path: str | Path, role: EntryRole) -> list[MotEntry]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    try:
        return parse_mot_file(text, role)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}", exc.line) from None


def active_entries(entries: list[MotEntry]) -> list[MotEntry]:
    """Drop entries flagged out with conf 0 (ground truth / results only)."""
    return [e for e in entries if e.active]


# ---------------------------------------------------------------------------
# trajectories

@dataclass
class Trajectory:
    """Time-indexed entries of a single identity."""

    id: int
    entries: dict[int, MotEntry] = field(default_factory=dict)

    @property
    def first_frame(self) -> int:
        return min(self.entries)

    @property
    def last_frame(self) -> int:
        return max(self.entries)

    @property
    def life_span(self) -> int:
        """Frames from first to last appearance inclusive, gaps included."""
        return self.last_frame - self.first_frame + 1

    def frames(self) -> list[int]:
        return sorted(self.entries)

    def at(self, frame: int) -> MotEntry | None:
        return self.entries.get(frame)

    def __len__(self) -> int:
        return len(self.entries)


def build_trajectories(entries: list[MotEntry]) -> list[Trajectory]:
    """Group entries by identity, sorted by id. Entries must carry real ids."""
    by_id: dict[int, Trajectory] = {}
    for e in entries:
        traj = by_id.setdefault(e.id, Trajectory(e.id))
        if e.frame in traj.entries:
            raise FormatError(f"duplicate entry for id {e.id} at frame {e.frame}")
        traj.entries[e.frame] = e
    return [by_id[i] for i in sorted(by_id)]


# ---------------------------------------------------------------------------
# sequence metadata sidecars

CAMERA_VALUES = ("static", "moving")
VIEWPOINT_VALUES = ("low", "medium", "high")
WEATHER_VALUES = ("sunny", "cloudy", "night")


@dataclass
class SequenceMeta:
    """Per-sequence properties, stored as a key=value sidecar file."""

    name: str
    fps: float
    width: int
    height: int
    length: int
    has3d: bool = False
    camera: str = "static"
    viewpoint: str = "medium"
    weather: str = "sunny"

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.length < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        if self.camera not in CAMERA_VALUES:
            raise ValueError(f"camera must be one of {CAMERA_VALUES}, got {self.camera!r}")
        if self.viewpoint not in VIEWPOINT_VALUES:
            raise ValueError(f"viewpoint must be one of {VIEWPOINT_VALUES}, got {self.viewpoint!r}")
        if self.weather not in WEATHER_VALUES:
            raise ValueError(f"weather must be one of {WEATHER_VALUES}, got {self.weather!r}")


def parse_key_values(text: str) -> dict[str, str]:
    """Parse 'key=value' lines; blank lines and #-comments are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"expected key=value, got {line!r}", lineno)
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("1", "true", "yes"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise FormatError(f"expected a boolean, got {value!r}")


def parse_sequence_meta(text: str, name: str | None = None) -> SequenceMeta:
    kv = parse_key_values(text)
    try:
        return SequenceMeta(
            name=kv.get("name", name or ""),
            fps=float(kv["fps"]),
            width=int(kv["width"]),
            height=int(kv["height"]),
            length=int(kv["length"]),
            has3d=_parse_bool(kv.get("has3d", "false")),
            camera=kv.get("camera", "static"),
            viewpoint=kv.get("viewpoint", "medium"),
            weather=kv.get("weather", "sunny"),
        )
    except KeyError as exc:
        raise FormatError(f"sequence metadata is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_sequence_meta(meta: SequenceMeta) -> str:
    lines = [
        f"name={meta.name}",
        f"fps={format_value(meta.fps)}",
        f"width={meta.width}",
        f"height={meta.height}",
        f"length={meta.length}",
        f"has3d={'true' if meta.has3d else 'false'}",
        f"camera={meta.camera}",
        f"viewpoint={meta.viewpoint}",
        f"weather={meta.weather}",
    ]
    return "\n".join(lines) + "\n"


def load_sequence_meta(directory: str | Path, name: str) -> SequenceMeta | None:
    """Read '<name>.info' next to the sequence file, if present."""
    path = Path(directory) / f"{name}.info"
    if not path.exists():
        return None
    return parse_sequence_meta(path.read_text(), name=name)


# ---------------------------------------------------------------------------
# sequence maps and bundles

def parse_seqmap(text: str) -> list[str]:
    """One sequence name per line; order preserved, duplicates rejected."""
    names: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        name = raw.strip()
        if not name or name.startswith("#"):
            continue
        if name in names:
            raise FormatError(f"duplicate sequence name {name!r}", lineno)
        names.append(name)
    return names


def load_seqmap(path: str | Path) -> list[str]:
    names = parse_seqmap(Path(path).read_text())
    if not names:
        raise FormatError(f"{path}: sequence map is empty")
    return names


@dataclass
class ResultBundle:
    """Per-sequence entry lists for one tracker (or one role of a dataset)."""

    sequences: dict[str, list[MotEntry]]

    def __getitem__(self, name: str) -> list[MotEntry]:
        return self.sequences[name]

    def __contains__(self, name: str) -> bool:
        return name in self.sequences

    def names(self) -> list[str]:
        return sorted(self.sequences)


def load_result_bundle(path: str | Path, role: EntryRole,
                       required: list[str] | None = None) -> ResultBundle:
    """Load every '<Sequence-Name>.txt' under a directory (or zip archive).

    When ``required`` is given, only those sequences are loaded and each must
    be present. Zip input is unpacked to a temporary directory first; the
    evaluation itself only ever sees a directory.
    """
    path = Path(path)
    if path.is_file() and path.suffix == ".zip":
        with tempfile.TemporaryDirectory() as tmp:
            with zipfile.ZipFile(path) as zf:
                zf.extractall(tmp)
            return load_result_bundle(tmp, role, required)
    if not path.is_dir():
        raise FormatError(f"{path} is not a directory")

    sequences: dict[str, list[MotEntry]] = {}
    if required is not None:
        for name in required:
            file = path / f"{name}.txt"
            if not file.exists():
                raise MissingSequenceError(name, path)
            sequences[name] = read_mot_path(file, role)
    else:
        for file in sorted(path.glob("*.txt")):
            if file.stem in sequences:
                raise FormatError(f"duplicate sequence name {file.stem!r} in {path}")
            sequences[file.stem] = read_mot_path(file, role)
    return ResultBundle(sequences)


def write_result_file(directory: str | Path, name: str, entries: list[MotEntry]) -> Path:
    """Write '<name>.txt' atomically (temp file + rename)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    target = directory / f"{name}.txt"
    tmp = target.with_suffix(".txt.tmp")
    tmp.write_text(write_mot_file(entries))
    tmp.replace(target)
    return target
