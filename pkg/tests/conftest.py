import numpy as np
import pytest

from mexi.session import Decision, MatcherSession, MouseEvent, TaskSpec

# Worked example: the five-decision history over a 4x4 task, 1-based in
# the source material, 0-based here.
WORKED_HISTORY = (
    Decision(row=2, col=3, confidence=1.0, t=3.0),
    Decision(row=0, col=0, confidence=0.9, t=8.0),
    Decision(row=0, col=1, confidence=0.5, t=15.0),
    Decision(row=0, col=0, confidence=0.5, t=16.0),
    Decision(row=1, col=0, confidence=0.45, t=34.0),
)

WORKED_REF_PAIRS = {(0, 0), (0, 1), (1, 2), (2, 3)}


@pytest.fixture
def worked_task():
    return TaskSpec(task_id="worked", n=4, m=4)


@pytest.fixture
def worked_history():
    return WORKED_HISTORY


def random_session(rng, task: TaskSpec, n_decisions=None, n_events=None, screen=(1000, 800)):
    """A small random-but-valid session for property tests."""
    n_decisions = n_decisions if n_decisions is not None else int(rng.integers(1, 15))
    n_events = n_events if n_events is not None else int(rng.integers(0, 40))
    times = np.cumsum(rng.uniform(0.2, 5.0, size=n_decisions))
    history = tuple(
        Decision(
            row=int(rng.integers(task.n)),
            col=int(rng.integers(task.m)),
            confidence=float(rng.uniform(0, 1)),
            t=float(t),
        )
        for t in times
    )
    ev_times = np.sort(rng.uniform(0, times[-1] + 5, size=n_events))
    movement = tuple(
        MouseEvent(
            x=float(rng.uniform(0, screen[0])),
            y=float(rng.uniform(0, screen[1])),
            kind=str(rng.choice(["move", "l", "r", "s"])),
            t=float(t),
        )
        for t in ev_times
    )
    return MatcherSession(
        matcher_id=f"rand-{rng.integers(1 << 30)}",
        task=task,
        screen=screen,
        history=history,
        movement=movement,
        warmup_count=int(rng.integers(0, min(3, n_decisions) + 1)),
    )
