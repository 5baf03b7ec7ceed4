"""Closed-form Winterbottom areas and energies for three reference families.

* ``euclidean_disk``: phi = |x|, Wulff shape the unit disk.
* ``l1_square``: phi = |x1| + |x2|, Wulff shape the square [-1, 1]^2.
* ``shifted_disk``: phi = |x| + a x2, Wulff shape the unit disk centred at (0, a).

For the disk families the Winterbottom shape is the cap of a unit disk above
a chord at signed distance ``d = beta - a`` from its centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .anisotropy import AnisotropySpec
from .errors import RegimeError

CASES = ("euclidean_disk", "l1_square", "shifted_disk")


@dataclass(frozen=True)
class OracleCase:
    case_id: str
    beta: float
    shift: float = 0.25  # used by shifted_disk only

    def __post_init__(self):
        if self.case_id not in CASES:
            raise ValueError(f"unknown oracle case {self.case_id!r}")
        lo, hi = self.interval()
        if not lo < self.beta < hi:
            raise RegimeError(
                f"beta={self.beta} outside the admissible interval ({lo}, {hi}) for {self.case_id}",
                required="winterbottom",
            )

    def interval(self) -> tuple[float, float]:
        if self.case_id == "shifted_disk":
            return -(1.0 - self.shift), 1.0 + self.shift
        return -1.0, 1.0

    def anisotropy(self) -> AnisotropySpec:
        if self.case_id == "euclidean_disk":
            return AnisotropySpec.euclidean()
        if self.case_id == "l1_square":
            return AnisotropySpec.polytope([(1, 1), (-1, 1), (-1, -1), (1, -1)])
        return AnisotropySpec.shifted([0.0, self.shift])

    @property
    def _a(self) -> float:
        return self.shift if self.case_id == "shifted_disk" else 0.0


def reference_area(case: OracleCase) -> float:
    if case.case_id == "l1_square":
        return 2.0 * (1.0 - case.beta)
    d = case.beta - case._a
    return math.acos(d) - d * math.sqrt(1.0 - d * d)


def reference_wetted_length(case: OracleCase) -> float:
    if case.case_id == "l1_square":
        return 2.0
    d = case.beta - case._a
    return 2.0 * math.sqrt(1.0 - d * d)


def reference_energy(case: OracleCase) -> float:
    """Energy of the Winterbottom shape.

    Disk families: integral of ``1 + a sin(theta)`` over the arc above the
    chord, ``theta`` in ``(asin d, pi - asin d)``, minus ``beta`` times the
    chord length.
    """
    if case.case_id == "l1_square":
        return 4.0 - 4.0 * case.beta
    a = case._a
    d = case.beta - a
    t1 = math.asin(d)
    t2 = math.pi - t1
    arc = (t2 - t1) + a * (math.cos(t1) - math.cos(t2))
    return arc - case.beta * reference_wetted_length(case)


def reference_ratio(case: OracleCase) -> float:
    return reference_energy(case) / math.sqrt(reference_area(case))
