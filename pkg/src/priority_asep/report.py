"""Outcome record shared by the exact verification routines."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckReport:
    """Result of one identity check.

    ``max_violation`` is the largest absolute entry of the residual; exact
    checks pass only when it is exactly zero.
    """

    name: str
    max_violation: object = 0
    tolerance: float = 0.0
    details: dict = field(default_factory=dict)
    skipped: bool = False
    message: str = ""

    @property
    def passed(self) -> bool:
        if self.skipped:
            return True
        return abs(self.max_violation) <= self.tolerance

    @property
    def status(self) -> str:
        if self.skipped:
            return "skipped"
        return "pass" if self.passed else "fail"

    def merge(self, other: "CheckReport") -> "CheckReport":
        """Worst-case combination of two reports under this report's name."""
        worst = max(abs(self.max_violation), abs(other.max_violation))
        details = {**self.details, **other.details}
        return CheckReport(self.name, worst, max(self.tolerance, other.tolerance), details,
                           self.skipped and other.skipped, "; ".join(m for m in (self.message, other.message) if m))

    def __str__(self) -> str:
        extra = f" ({self.message})" if self.message else ""
        return f"{self.name}: {self.status}, max violation {self.max_violation}{extra}"


def skipped(name: str, message: str) -> CheckReport:
    return CheckReport(name, 0, skipped=True, message=message)
