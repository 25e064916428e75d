"""Solver outcome shared by every backend."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

SAT = "SAT"
UNSAT = "UNSAT"


@dataclass
class Result:
    status: str
    assignment: Optional[Tuple[int, ...]] = None  # one bitmask per free variable
    weight: Optional[Fraction] = None
    stats: Dict[str, object] = field(default_factory=dict)

    @property
    def sat(self):
        return self.status == SAT

    def sets(self):
        from .graph import bits
        if self.assignment is None:
            return None
        return [sorted(bits(m)) for m in self.assignment]
