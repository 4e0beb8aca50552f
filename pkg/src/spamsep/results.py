"""Outcome records returned by backends."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping


class CountsError(ValueError):
    pass


@dataclass(frozen=True)
class Counts:
    """Sampled outcome counts; bit ``i`` of a key belongs to the ``i``-th measured qubit."""

    counts: Mapping[str, int]
    shots: int
    circuit_id: str | None = None

    def __post_init__(self) -> None:
        clean = {}
        width = None
        for key, val in self.counts.items():
            if not key or any(ch not in "01" for ch in key):
                raise CountsError(f"bad outcome key {key!r}")
            if width is None:
                width = len(key)
            elif len(key) != width:
                raise CountsError("outcome keys have different widths")
            if int(val) != val or val < 0:
                raise CountsError(f"count for {key} must be a nonnegative integer, got {val!r}")
            if val:
                clean[key] = int(val)
        total = sum(clean.values())
        if total != self.shots:
            where = f" for circuit {self.circuit_id}" if self.circuit_id else ""
            raise CountsError(f"counts sum to {total}, expected {self.shots} shots{where}")
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    def probabilities(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}


@dataclass(frozen=True)
class Distribution:
    """Exact outcome probabilities (an infinite-shot stand-in for :class:`Counts`)."""

    probs: Mapping[str, float]
    circuit_id: str | None = None
    shots: None = field(default=None, init=False)

    def probabilities(self) -> dict[str, float]:
        return dict(self.probs)
