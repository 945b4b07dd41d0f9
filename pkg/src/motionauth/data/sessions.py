"""Session records and the on-disk CSV corpus layout.

Layout::

    <root>/manifest.txt                       key = value lines
    <root>/<user_id>/day<1|2>/session<00..09>.csv

Each CSV has the header ``t,x,y,z,trigger`` followed by one row per
timestamp (``t`` = 0..T-1). Floats are written with ``repr`` so a
write/read cycle is bit-exact.
"""

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DataError

SCHEMA_VERSION = 1
N_TIMESTAMPS = 135
N_FEATURES = 4
SAMPLE_INTERVAL_MS = 3000.0 / N_TIMESTAMPS
COLUMNS = ("t", "x", "y", "z", "trigger")

_SESSION_RE = re.compile(r"session(\d+)\.csv$")
_DAY_RE = re.compile(r"day([12])$")


@dataclass(frozen=True)
class SessionFormat:
    n_timestamps: int = N_TIMESTAMPS
    columns: tuple = COLUMNS


@dataclass(frozen=True, eq=False)
class Session:
    """One recorded trial: ``samples`` is (T, 4) = x, y, z (meters), trigger in [0, 1]."""

    user_id: str
    day: int
    session_index: int
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != N_FEATURES:
            raise DataError(f"session samples must be (T, {N_FEATURES}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError(f"non-finite samples in session {self.key}")
        trig = arr[:, 3]
        if np.any((trig < 0) | (trig > 1)):
            raise DataError(f"trigger outside [0, 1] in session {self.key}")
        if self.day not in (1, 2):
            raise DataError(f"day must be 1 or 2, got {self.day}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def key(self):
        return (self.user_id, self.day, self.session_index)

    @property
    def n_timestamps(self):
        return self.samples.shape[0]


def session_path(root, user_id, day, session_index):
    return Path(root) / user_id / f"day{day}" / f"session{session_index:02d}.csv"


def write_session(session, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for t, row in enumerate(session.samples):
            writer.writerow([t] + [repr(float(v)) for v in row])


def read_session(path, user_id, day, session_index, fmt=SessionFormat()):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc})") from exc
    if not rows or tuple(c.strip() for c in rows[0]) != tuple(fmt.columns):
        raise DataError(f"{path}: header must be {','.join(fmt.columns)}")
    body = rows[1:]
    if len(body) != fmt.n_timestamps:
        raise DataError(f"{path}: expected {fmt.n_timestamps} data rows, found {len(body)}")
    samples = np.empty((len(body), N_FEATURES), dtype=np.float64)
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(fmt.columns):
            raise DataError(f"{path}:{line}: expected {len(fmt.columns)} columns, found {len(row)}")
        try:
            t = int(row[0])
            vals = [float(c) for c in row[1:]]
        except ValueError as exc:
            raise DataError(f"{path}:{line}: non-numeric cell ({exc})") from exc
        if t != i:
            raise DataError(f"{path}:{line}: timestamp {t} out of order (expected {i})")
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"{path}:{line}: non-finite value")
        if not 0.0 <= vals[3] <= 1.0:
            raise DataError(f"{path}:{line}: trigger {vals[3]} outside [0, 1]")
        samples[i] = vals
    return Session(user_id, day, session_index, samples)


def write_manifest(root, users, fmt=SessionFormat(), extra=None):
    lines = {
        "schema_version": str(SCHEMA_VERSION),
        "root": str(Path(root).resolve()),
        "users": ",".join(users),
        "n_timestamps": str(fmt.n_timestamps),
        "columns": ",".join(fmt.columns),
    }
    lines.update(extra or {})
    text = "".join(f"{k} = {v}\n" for k, v in lines.items())
    (Path(root) / "manifest.txt").write_text(text)


def read_manifest(root):
    path = Path(root) / "manifest.txt"
    if not path.exists():
        return None
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{n}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    version = out.get("schema_version")
    if version != str(SCHEMA_VERSION):
        raise DataError(f"{path}: unsupported schema_version {version!r}")
    return out


def save_sessions(sessions, root, fmt=SessionFormat(), extra_manifest=None):
    users = sorted({s.user_id for s in sessions})
    for s in sessions:
        write_session(s, session_path(root, s.user_id, s.day, s.session_index))
    write_manifest(root, users, fmt, extra_manifest)


def load_sessions(root, fmt=SessionFormat()):
    """Load every session under ``root``, sorted by (user, day, session)."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: dataset root does not exist")
    manifest = read_manifest(root)
    if manifest is not None and manifest.get("users"):
        users = manifest["users"].split(",")
    else:
        users = sorted(p.name for p in root.iterdir() if p.is_dir())
    sessions = []
    for user in users:
        udir = root / user
        if not udir.is_dir():
            raise DataError(f"{udir}: listed user has no directory")
        for ddir in sorted(udir.iterdir()):
            m = _DAY_RE.match(ddir.name)
            if not (ddir.is_dir() and m):
                continue
            for f in sorted(ddir.iterdir()):
                sm = _SESSION_RE.match(f.name)
                if sm:
                    sessions.append(read_session(f, user, int(m.group(1)), int(sm.group(1)), fmt))
    if not sessions:
        raise DataError(f"{root}: no session files found")
    sessions.sort(key=lambda s: s.key)
    return sessions


def group_sessions(sessions):
    """{(user_id, day): [sessions sorted by index]}."""
    groups = {}
    for s in sessions:
        groups.setdefault((s.user_id, s.day), []).append(s)
    for v in groups.values():
        v.sort(key=lambda s: s.session_index)
    return groups
