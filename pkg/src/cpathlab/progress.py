"""Progress events for path traces and verification runs in cpathlab.

A long-running operation accepts an optional ``progress_observer`` callable and feeds it ``Progress``
events. Runs made of several stages tag the events of each stage with ``add_progress_step``.
"""

from dataclasses import dataclass, replace
from enum import Enum, auto
from typing import Callable, Optional


class ProgressStatus(Enum):
    """Stage an event belongs to.

    | Name                | Stage                                                |
    |---------------------|------------------------------------------------------|
    | TRACING_PATH        | One barrier parameter of a path trace is done        |
    | COMPUTING_CENTER    | Analytic center and limiting direction at x*         |
    | RUNNING_EXPERIMENTS | One verification experiment is done                  |
    | SAVING_TRACE        | The trace CSV is being written                       |
    | SAVING_REPORT       | The verification report is being written             |

    """

    TRACING_PATH = auto()
    COMPUTING_CENTER = auto()
    RUNNING_EXPERIMENTS = auto()
    SAVING_TRACE = auto()
    SAVING_REPORT = auto()


@dataclass(frozen=True)
class Progress:
    """An immutable progress event.

    Attributes:
        percent (int): Completion of the current stage in 0..100, or -1 when unknown.
        status (Optional[ProgressStatus]): Stage of the event; observers map it to a label.
        step (Optional[int]): 1-based stage number in a multi-stage run.
        total_steps (Optional[int]): Number of stages of the run.

    """

    percent: int
    status: Optional[ProgressStatus] = None
    step: Optional[int] = None
    total_steps: Optional[int] = None


ProgressCallback = Callable[[Progress], None]


def add_progress_step(
    step: int, total_steps: int, status: Optional[ProgressStatus] = None
) -> Callable[[ProgressCallback], ProgressCallback]:
    """Return a decorator that stamps the events passed to an observer with a stage.

    Args:
        step (int): Stage number to set on every event.
        total_steps (int): Number of stages.
        status (Optional[ProgressStatus]): Status replacing the event's own, if given.

    Example:
        ```python
        observer = add_progress_step(1, 3, ProgressStatus.TRACING_PATH)(print)
        tracer.trace(inst, x0, progress_observer=observer)
        ```

    """
    def decorator(observer: ProgressCallback) -> ProgressCallback:
        def stamped(progress: Progress) -> None:
            observer(replace(progress, step=step, total_steps=total_steps, status=status or progress.status))
        return stamped
    return decorator


def calculate_percent(done: int, total: Optional[int]) -> int:
    """Return ``done / total`` as a rounded percentage capped at 100, or -1 without a positive total."""
    if not total or total <= 0:
        return -1
    return min(round(100 * done / total), 100)


class ProgressObserver:
    """Base class of stateful observers; the default ignores every event."""

    def __call__(self, progress: Progress) -> None:
        """Receive one event."""
