"""Piecewise-constant reference signals.

A signal is a list of breakpoints ``(t_start, value)``; each value holds on the
left-open interval after its start time, i.e. the value of breakpoint ``j``
governs ``(t_j, t_{j+1}]`` and the last value extends indefinitely.
"""
from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass

from .model import ConfigurationError

HEADER = ("t_s", "pi")


class SignalParseError(ConfigurationError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class StepAlignmentError(ValueError):
    """An interval straddles a breakpoint; the caller must split the step."""


@dataclass(frozen=True)
class ReferenceSignal:
    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bps = tuple((float(t), float(v)) for t, v in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        if not bps or bps[0][0] != 0.0:
            raise ConfigurationError("signal must start with a breakpoint at t = 0")
        for (t0, _), (t1, _) in zip(bps, bps[1:]):
            if not t1 > t0:
                raise ConfigurationError(f"breakpoint times must increase strictly ({t0} -> {t1})")
        if any(v < 0 for _, v in bps):
            raise ConfigurationError("signal values must be non-negative")

    @classmethod
    def constant(cls, value: float = 1.0) -> "ReferenceSignal":
        return cls(((0.0, value),))

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.breakpoints]

    def _index(self, t: float) -> int:
        # index of the breakpoint governing an instant just after t
        return bisect.bisect_right(self.times, t) - 1

    def value_for_interval(self, t_from: float, t_to: float) -> float:
        if not t_to > t_from:
            raise ValueError(f"empty interval ({t_from}, {t_to}]")
        if t_from < 0:
            raise ConfigurationError(f"interval ({t_from}, {t_to}] starts before the signal")
        i = self._index(t_from)
        if i + 1 < len(self.breakpoints) and self.breakpoints[i + 1][0] < t_to:
            raise StepAlignmentError(
                f"breakpoint at t={self.breakpoints[i + 1][0]} inside ({t_from}, {t_to}]"
            )
        return self.breakpoints[i][1]

    def breakpoints_within(self, t_from: float, t_to: float) -> list[float]:
        """Breakpoint times strictly inside (t_from, t_to)."""
        return [t for t in self.times if t_from < t < t_to]


def parse_signal(text: str) -> ReferenceSignal:
    """Parse ``t_s,pi`` CSV text."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(c.strip() for c in rows[0]) != HEADER:
        raise SignalParseError(1, f"expected header {','.join(HEADER)!r}")
    bps = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise SignalParseError(lineno, f"expected 2 columns, got {len(row)}")
        try:
            t, v = float(row[0]), float(row[1])
        except ValueError:
            raise SignalParseError(lineno, f"not a number: {row!r}") from None
        if v < 0:
            raise SignalParseError(lineno, f"negative reference {v}")
        if bps and not t > bps[-1][0]:
            raise SignalParseError(lineno, f"time {t} does not increase")
        if not bps and t != 0:
            raise SignalParseError(lineno, "first breakpoint must be at t = 0")
        bps.append((t, v))
    if not bps:
        raise SignalParseError(len(rows) + 1, "no breakpoints")
    return ReferenceSignal(tuple(bps))


def serialize_signal(signal: ReferenceSignal) -> str:
    lines = [",".join(HEADER)]
    lines += [f"{t!r},{v!r}" for t, v in signal.breakpoints]
    return "\n".join(lines) + "\n"


def demo_signal() -> ReferenceSignal:
    """Five-hour reconstruction of the single-appliance demonstration profile.

    Not published data. It starts at steady state, dips below 1, holds a
    reduction, recovers above 1 far enough to enter absorption mode, steps
    further up, pays the absorbed energy back and ends with 65 min at 1.
    """
    minutes = [(0, 1.0), (30, 0.7), (60, 0.85), (100, 1.3), (150, 1.5),
               (170, 1.1), (190, 0.75), (235, 1.0)]
    return ReferenceSignal(tuple((60.0 * m, v) for m, v in minutes))


DEMO_HORIZON = 5 * 3600.0
