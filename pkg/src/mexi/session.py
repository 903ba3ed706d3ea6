"""Domain model for matching tasks and recorded matcher sessions.

A session is an immutable record of one human matcher working on one
matching task: a timestamped decision history plus a mouse movement map.
Derivations (matching matrix, final match, heat maps) are pure functions.

Indices are 1-based in the file format and 0-based internally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, MalformedSessionError, SessionFormatError

MOVE, LEFT_CLICK, RIGHT_CLICK, SCROLL = "move", "l", "r", "s"
EVENT_KINDS = (MOVE, LEFT_CLICK, RIGHT_CLICK, SCROLL)

DEFAULT_BINS = (64, 48)  # (cols, rows)


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    n: int  # source elements (rows)
    m: int  # target elements (cols)
    row_names: tuple[str, ...] | None = None
    col_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ConfigurationError(f"task dimensions must be >= 1, got {self.n}x{self.m}")
        if self.row_names is not None and len(self.row_names) != self.n:
            raise ConfigurationError("row_names length must equal n")
        if self.col_names is not None and len(self.col_names) != self.m:
            raise ConfigurationError("col_names length must equal m")


@dataclass(frozen=True)
class Decision:
    row: int  # 0-based
    col: int  # 0-based
    confidence: float
    t: float


@dataclass(frozen=True)
class MouseEvent:
    x: float
    y: float
    kind: str
    t: float


@dataclass(frozen=True)
class MatcherSession:
    matcher_id: str
    task: TaskSpec
    screen: tuple[int, int]  # (width, height) in px
    history: tuple[Decision, ...]
    movement: tuple[MouseEvent, ...]
    warmup_count: int = 0

    def __post_init__(self):
        if not 0 <= self.warmup_count <= len(self.history):
            raise MalformedSessionError(
                f"warmup_count {self.warmup_count} out of range for history of "
                f"length {len(self.history)}"
            )


@dataclass(frozen=True)
class Match:
    """Non-zero support of a matching matrix: {(row, col): confidence}."""

    entries: dict

    def __post_init__(self):
        for pair, conf in self.entries.items():
            if conf <= 0:
                raise ValueError(f"match entry {pair} has non-positive confidence {conf}")

    @property
    def pairs(self) -> set[tuple[int, int]]:
        return set(self.entries)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class ReferenceMatch:
    positives: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, pairs) -> "ReferenceMatch":
        return cls(frozenset((int(r), int(c)) for r, c in pairs))

    def __len__(self):
        return len(self.positives)


@dataclass(frozen=True)
class HeatMapSet:
    """Per-kind binned aggregation grids of a movement map.

    Each grid has shape (rows, cols); cell counts sum to the number of
    events of that kind.
    """

    grids: dict[str, np.ndarray]
    bin_resolution: tuple[int, int]  # (cols, rows)


def matrix_from_history(history: tuple[Decision, ...], task: TaskSpec) -> np.ndarray:
    """Derive the matching matrix: each cell holds the latest confidence
    assigned to it, 0.0 if never visited."""
    matrix = np.zeros((task.n, task.m))
    for d in history:  # history is time-ordered, so later writes win
        if not (0 <= d.row < task.n and 0 <= d.col < task.m):
            raise MalformedSessionError(
                f"decision on ({d.row + 1},{d.col + 1}) outside task {task.n}x{task.m}"
            )
        matrix[d.row, d.col] = d.confidence
    return matrix


def match_of(matrix: np.ndarray) -> Match:
    """Extract the non-zero support of a matching matrix."""
    rows, cols = np.nonzero(matrix)
    return Match({(int(r), int(c)): float(matrix[r, c]) for r, c in zip(rows, cols)})


def heatmaps_from_map(
    movement: tuple[MouseEvent, ...],
    screen: tuple[int, int],
    bins: tuple[int, int] = DEFAULT_BINS,
) -> HeatMapSet:
    """Bin mouse events into one count grid per event kind."""
    bx, by = bins
    if bx < 1 or by < 1:
        raise ConfigurationError(f"bin resolution must be >= 1, got {bins}")
    width, height = screen
    grids = {kind: np.zeros((by, bx)) for kind in EVENT_KINDS}
    for ev in movement:
        if not (0 <= ev.x <= width and 0 <= ev.y <= height):
            raise MalformedSessionError(
                f"event at ({ev.x},{ev.y}) outside screen {width}x{height}"
            )
        cx = min(int(ev.x / width * bx), bx - 1)
        cy = min(int(ev.y / height * by), by - 1)
        grids[ev.kind][cy, cx] += 1.0
    return HeatMapSet(grids=grids, bin_resolution=(bx, by))


def truncate_history(session: MatcherSession, k: int) -> MatcherSession:
    """Limit a session to its first k decisions, keeping movement events
    up to the timestamp of the last kept decision."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= len(session.history):
        return session
    history = session.history[:k]
    if history:
        cutoff = history[-1].t
        movement = tuple(ev for ev in session.movement if ev.t <= cutoff)
    else:
        movement = ()
    return replace(
        session,
        history=history,
        movement=movement,
        warmup_count=min(session.warmup_count, k),
    )


# ---------------------------------------------------------------------------
# session-log parsing / serialization
#
# One JSON document per session: matcher_id, task_id, screen {w,h},
# warmup_count, decisions [{row,col,conf,t}] (1-based), movements
# [{x,y,kind,t}].  Timestamps are seconds as decimals.


def _require(doc, key, where):
    if key not in doc:
        raise SessionFormatError(f"missing field '{key}'", location=where)
    return doc[key]


def parse_session(data: bytes | str, task: TaskSpec, jitter_ties: bool = False) -> MatcherSession:
    """Parse and validate a session log against its task spec.

    Duplicate decision timestamps are rejected unless ``jitter_ties`` is
    set, in which case ties are broken in input order by 1 ms increments.
    """
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SessionFormatError("session log must be a JSON object")

    matcher_id = str(_require(doc, "matcher_id", "session"))
    task_id = str(_require(doc, "task_id", "session"))
    if task_id != task.task_id:
        raise SessionFormatError(
            f"session task_id '{task_id}' does not match task spec '{task.task_id}'"
        )
    screen_doc = _require(doc, "screen", "session")
    width = int(_require(screen_doc, "w", "screen"))
    height = int(_require(screen_doc, "h", "screen"))
    if width < 1 or height < 1:
        raise SessionFormatError(f"screen size must be positive, got {width}x{height}")
    warmup_count = int(doc.get("warmup_count", 0))
    if warmup_count < 0:
        raise SessionFormatError("warmup_count must be >= 0", location="warmup_count")

    decisions = []
    prev_t = None
    for i, d in enumerate(_require(doc, "decisions", "session")):
        where = f"decisions[{i}]"
        row = int(_require(d, "row", where))
        col = int(_require(d, "col", where))
        conf = float(_require(d, "conf", where))
        t = float(_require(d, "t", where))
        if not (1 <= row <= task.n and 1 <= col <= task.m):
            raise SessionFormatError(
                f"pair ({row},{col}) outside task {task.n}x{task.m}", location=where
            )
        if not 0.0 <= conf <= 1.0:
            raise SessionFormatError(f"confidence {conf} outside [0,1]", location=where)
        if t < 0:
            raise SessionFormatError(f"negative timestamp {t}", location=where)
        if prev_t is not None and t <= prev_t:
            if jitter_ties and t >= prev_t - 1e-12:
                t = prev_t + 1e-3
            else:
                raise SessionFormatError(
                    f"timestamp {t} not strictly after {prev_t}", location=where
                )
        prev_t = t
        decisions.append(Decision(row=row - 1, col=col - 1, confidence=conf, t=t))
    if warmup_count > len(decisions):
        raise SessionFormatError(
            f"warmup_count {warmup_count} exceeds {len(decisions)} decisions",
            location="warmup_count",
        )

    movements = []
    prev_t = None
    for i, g in enumerate(_require(doc, "movements", "session")):
        where = f"movements[{i}]"
        x = float(_require(g, "x", where))
        y = float(_require(g, "y", where))
        kind = str(_require(g, "kind", where))
        t = float(_require(g, "t", where))
        if kind == "move":  # long form accepted on input
            kind = MOVE
        if kind not in EVENT_KINDS:
            raise SessionFormatError(f"unknown event kind '{kind}'", location=where)
        if not (0 <= x <= width and 0 <= y <= height):
            raise SessionFormatError(
                f"position ({x},{y}) outside screen {width}x{height}", location=where
            )
        if t < 0:
            raise SessionFormatError(f"negative timestamp {t}", location=where)
        if prev_t is not None and t < prev_t:
            raise SessionFormatError(f"timestamp {t} decreases below {prev_t}", location=where)
        prev_t = t
        movements.append(MouseEvent(x=x, y=y, kind=kind, t=t))

    return MatcherSession(
        matcher_id=matcher_id,
        task=task,
        screen=(width, height),
        history=tuple(decisions),
        movement=tuple(movements),
        warmup_count=warmup_count,
    )


def serialize_session(session: MatcherSession) -> bytes:
    """Canonical serialization; parse(serialize(s)) == s."""
    doc = {
        "matcher_id": session.matcher_id,
        "task_id": session.task.task_id,
        "screen": {"w": session.screen[0], "h": session.screen[1]},
        "warmup_count": session.warmup_count,
        "decisions": [
            {"row": d.row + 1, "col": d.col + 1, "conf": d.confidence, "t": d.t}
            for d in session.history
        ],
        "movements": [
            {"x": ev.x, "y": ev.y, "kind": ev.kind, "t": ev.t} for ev in session.movement
        ],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def parse_task(data: bytes | str) -> TaskSpec:
    """Parse a task spec JSON: {task_id, n, m, rows?, cols?}."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SessionFormatError(f"invalid JSON: {exc}") from exc
    rows = doc.get("rows")
    cols = doc.get("cols")
    return TaskSpec(
        task_id=str(_require(doc, "task_id", "task")),
        n=int(_require(doc, "n", "task")),
        m=int(_require(doc, "m", "task")),
        row_names=tuple(rows) if rows is not None else None,
        col_names=tuple(cols) if cols is not None else None,
    )


def serialize_task(task: TaskSpec) -> bytes:
    doc = {"task_id": task.task_id, "n": task.n, "m": task.m}
    if task.row_names is not None:
        doc["rows"] = list(task.row_names)
    if task.col_names is not None:
        doc["cols"] = list(task.col_names)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()


def parse_reference(data: bytes | str, task: TaskSpec | None = None) -> ReferenceMatch:
    """Parse a reference match CSV with header ``row,col`` (1-based)."""
    if isinstance(data, bytes):
        data = data.decode()
    lines = [ln.strip() for ln in data.splitlines() if ln.strip()]
    if not lines or lines[0].replace(" ", "") != "row,col":
        raise SessionFormatError("reference CSV must start with header 'row,col'")
    pairs = set()
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 2:
            raise SessionFormatError("expected two columns", location=f"line {i}")
        row, col = int(parts[0]), int(parts[1])
        if task is not None and not (1 <= row <= task.n and 1 <= col <= task.m):
            raise SessionFormatError(
                f"pair ({row},{col}) outside task {task.n}x{task.m}", location=f"line {i}"
            )
        pairs.add((row - 1, col - 1))
    return ReferenceMatch.from_pairs(pairs)


def serialize_reference(ref: ReferenceMatch) -> bytes:
    lines = ["row,col"]
    for row, col in sorted(ref.positives):
        lines.append(f"{row + 1},{col + 1}")
    return ("\n".join(lines) + "\n").encode()
