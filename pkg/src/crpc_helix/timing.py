"""Per-stage wall-clock timing for CLI runs and reports."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)


@dataclass
class StageRecord:
    stage: str
    status: str
    elapsed_ms: float
    error: str | None = None

    def to_dict(self) -> dict:
        data = {"stage": self.stage, "status": self.status, "elapsed_ms": round(self.elapsed_ms, 3)}
        if self.error:
            data["error"] = self.error
        return data


@dataclass
class StageTimer:
    records: list[StageRecord] = field(default_factory=list)

    def log(self, stage: str, status: str, elapsed_ms: float, error: str | None = None) -> None:
        self.records.append(StageRecord(stage, status, elapsed_ms, error))
        logger.debug("[timing] %s %s in %.1f ms", stage, status, elapsed_ms)

    def summary(self) -> list[dict]:
        return [r.to_dict() for r in self.records]

    @property
    def total_ms(self) -> float:
        return sum(r.elapsed_ms for r in self.records)


@contextmanager
def track(stage: str, timer: StageTimer | None = None):
    """Context manager that times a stage and records success or error."""
    t0 = time.monotonic()
    try:
        yield
        if timer is not None:
            timer.log(stage, "success", (time.monotonic() - t0) * 1000)
    except Exception as exc:
        if timer is not None:
            timer.log(stage, "error", (time.monotonic() - t0) * 1000, error=str(exc))
        raise
