"""Tests for the progress helpers in cpathlab.progress."""
import pytest

from cpathlab.progress import Progress, ProgressObserver, ProgressStatus, add_progress_step, calculate_percent


def test_progress_is_immutable():
    """Test that Progress attributes cannot be modified after creation."""
    progress = Progress(10, status=ProgressStatus.TRACING_PATH)
    with pytest.raises(AttributeError):
        progress.percent = 20
    assert progress.percent == 10
    assert progress.status == ProgressStatus.TRACING_PATH
    assert progress.step is None
    assert progress.total_steps is None


def test_add_progress_step_enriches_events():
    """Test that add_progress_step sets step, total_steps and the default status."""
    received = []
    wrapped = add_progress_step(2, 3, ProgressStatus.COMPUTING_CENTER)(received.append)
    wrapped(Progress(50))
    assert len(received) == 1
    event = received[0]
    assert (event.percent, event.step, event.total_steps) == (50, 2, 3)
    assert event.status == ProgressStatus.COMPUTING_CENTER


def test_add_progress_step_keeps_event_status():
    """Test that an event status is kept when the decorator has none."""
    received = []
    wrapped = add_progress_step(1, 2)(received.append)
    wrapped(Progress(5, status=ProgressStatus.SAVING_TRACE))
    assert received[0].status == ProgressStatus.SAVING_TRACE


@pytest.mark.parametrize(
    "done, total, expected",
    [(0, 10, 0), (3, 10, 30), (2, 3, 67), (12, 10, 100), (1, 0, -1), (1, None, -1)],
)
def test_calculate_percent(done, total, expected):
    """Test rounding, clamping and the unknown-total case of calculate_percent."""
    assert calculate_percent(done, total) == expected


def test_progress_observer_default_is_noop():
    """Test that the base observer accepts events and does nothing."""
    assert ProgressObserver()(Progress(1)) is None
