"""Sliding windows, time-aligned impostor sampling and day-based splits."""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, DataError
from .sessions import group_sessions

GENUINE = 1
IMPOSTOR = 0


@dataclass(frozen=True)
class WindowSpec:
    size: int
    stride: int = 5

    def __post_init__(self):
        if self.size < 1 or self.stride < 1:
            raise ConfigurationError(f"window size and stride must be >= 1, got {self}")


@dataclass(frozen=True, eq=False)
class LabeledWindow:
    values: np.ndarray = field(repr=False)
    label: int
    source_user: str
    start: int
    day: int
    session_index: int
    window_id: str
    matched_to: str = None
    session: object = field(default=None, repr=False)

    @property
    def length(self):
        return self.values.shape[0]

    def future(self, horizon):
        """Rows [start + n, start + n + horizon) of the source session, or None past its end."""
        lo = self.start + self.length
        if self.session is None or lo + horizon > self.session.n_timestamps:
            return None
        return self.session.samples[lo:lo + horizon]


def window_count(n_timestamps, size, stride):
    return (n_timestamps - size) // stride + 1


def slide_windows(session, spec):
    """[(start, rows[start:start+size]), ...] for starts 0, stride, 2*stride, ..."""
    samples = session.samples if hasattr(session, "samples") else np.asarray(session)
    n_t = samples.shape[0]
    if spec.size > n_t:
        raise ConfigurationError(f"window size {spec.size} exceeds session length {n_t}")
    return [(s, samples[s:s + spec.size]) for s in range(0, n_t - spec.size + 1, spec.stride)]


def _window_id(user, day, idx, start):
    return f"{user}/d{day}/s{idx:02d}/t{start:03d}"


def genuine_windows(sessions, spec):
    out = []
    for s in sessions:
        for start, rows in slide_windows(s, spec):
            out.append(LabeledWindow(rows, GENUINE, s.user_id, start, s.day, s.session_index,
                                     _window_id(s.user_id, s.day, s.session_index, start),
                                     session=s))
    return out


def sample_impostors(genuine, all_sessions, target_user, rng):
    """One impostor per genuine window, cut at the same start with the same length.

    Each impostor comes from a uniformly chosen other user and then a uniformly
    chosen session of that user recorded on the genuine window's day; the
    draw is repeated independently for every window.
    """
    groups = group_sessions(all_sessions)
    out = []
    for g in genuine:
        others = sorted(u for (u, d) in groups if d == g.day and u != target_user)
        if not others:
            raise DataError(f"cannot sample impostors for {target_user!r}: no other user on day {g.day}")
        user = others[rng.integers(len(others))]
        pool = groups[(user, g.day)]
        s = pool[rng.integers(len(pool))]
        rows = s.samples[g.start:g.start + g.length]
        if rows.shape[0] != g.length:
            raise DataError(f"impostor session {s.key} too short for window {g.window_id}")
        wid = f"{g.window_id}|{_window_id(s.user_id, s.day, s.session_index, g.start)}"
        out.append(LabeledWindow(rows, IMPOSTOR, s.user_id, g.start, s.day, s.session_index,
                                 wid, matched_to=g.window_id, session=s))
    return out


def _interleave(gen, imp):
    return [w for pair in zip(gen, imp) for w in pair]


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    """Per-user windows: train/validation from day 1, test from day 2, pairs interleaved."""

    target_user: str
    window_spec: WindowSpec
    train: list
    validation: list
    test: list
    rng_seed: int

    def fingerprint(self):
        h = hashlib.sha256()
        for part in (self.train, self.validation, self.test):
            for w in part:
                h.update(w.window_id.encode())
                h.update(b"\x01" if w.label else b"\x00")
            h.update(b"|")
        return h.hexdigest()[:16]


def build_split(sessions, spec, target_user, validation_fraction=0.2, rng_seed=0):
    """Deterministic per-user split.

    Train and test impostors are drawn from independent child streams of
    ``rng_seed``; a third stream picks the ``validation_fraction`` of day-1
    (genuine, impostor) pairs that are withheld for model selection.
    """
    if not 0.0 <= validation_fraction < 1.0:
        raise ConfigurationError("validation_fraction must lie in [0, 1)")
    groups = group_sessions(sessions)
    day1 = groups.get((target_user, 1))
    day2 = groups.get((target_user, 2))
    if not day1 or not day2:
        raise DataError(f"user {target_user!r} needs sessions on both day 1 and day 2")
    train_ss, test_ss, val_ss = np.random.SeedSequence(rng_seed).spawn(3)
    gen1 = genuine_windows(day1, spec)
    imp1 = sample_impostors(gen1, sessions, target_user, np.random.default_rng(train_ss))
    gen2 = genuine_windows(day2, spec)
    imp2 = sample_impostors(gen2, sessions, target_user, np.random.default_rng(test_ss))

    n_val = int(round(validation_fraction * len(gen1)))
    held = set(np.random.default_rng(val_ss).permutation(len(gen1))[:n_val].tolist())
    keep = [i for i in range(len(gen1)) if i not in held]
    val = sorted(held)
    return DatasetSplit(
        target_user=target_user,
        window_spec=spec,
        train=_interleave([gen1[i] for i in keep], [imp1[i] for i in keep]),
        validation=_interleave([gen1[i] for i in val], [imp1[i] for i in val]),
        test=_interleave(gen2, imp2),
        rng_seed=rng_seed,
    )


def stack_values(windows):
    return np.stack([w.values for w in windows]) if windows else np.zeros((0, 0, 4))


def labels_of(windows):
    return np.array([w.label for w in windows], dtype=np.int64)
