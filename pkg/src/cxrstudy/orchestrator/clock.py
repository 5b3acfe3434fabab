"""Clock abstraction: reading times must come from a monotonic source.

SystemClock wires to the OS; SimClock drives deterministic simulations
where wall and monotonic time advance together under test control.
"""

from __future__ import annotations

import threading
import time
from typing import Protocol

__all__ = ["Clock", "SystemClock", "SimClock"]


class Clock(Protocol):
    def now(self) -> float:
        """Wall-clock seconds since the epoch (display/audit only)."""
        ...

    def monotonic(self) -> float:
        """Monotonic seconds; authoritative for durations."""
        ...


class SystemClock:
    def now(self) -> float:
        return time.time()

    def monotonic(self) -> float:
        return time.monotonic()


class SimClock:
    """Manually advanced clock for simulations and tests."""

    def __init__(self, start_wall: float = 1_700_000_000.0, start_mono: float = 0.0):
        self._wall = start_wall
        self._mono = start_mono
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._wall

    def monotonic(self) -> float:
        with self._lock:
            return self._mono

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot advance a clock backwards")
        with self._lock:
            self._wall += seconds
            self._mono += seconds

    def jump_wall(self, seconds: float) -> None:
        """Adjust wall time only, emulating an NTP step; monotonic is unaffected."""
        with self._lock:
            self._wall += seconds
