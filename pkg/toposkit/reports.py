from dataclasses import dataclass, field
from typing import Any

from toposkit.errors import ValidationError


@dataclass(kw_only=True)
class Violation:
    law: str
    message: str
    witness: tuple = ()


class ValidationReport:
    def __init__(self, subject: str):
        self.subject = subject
        self.violations: list[Violation] = []

    def add(self, law: str, message: str, *witness) -> None:
        self.violations.append(Violation(law=law, message=message, witness=tuple(witness)))

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def raise_for_violations(self) -> None:
        if not self.ok:
            raise ValidationError(self)

    def __str__(self):
        if self.ok:
            return f"{self.subject}: ok"
        lines = [f"{self.subject}: {len(self.violations)} violation(s)"]
        lines += [f"  - [{v.law}] {v.message}" for v in self.violations]
        return "\n".join(lines)

    def __repr__(self):
        return f"ValidationReport({self.subject!r}, {len(self.violations)} violations)"


@dataclass(kw_only=True)
class CheckRecord:
    name: str
    detail: str = ""


@dataclass(kw_only=True)
class PassedCheck(CheckRecord):
    pass


@dataclass(kw_only=True)
class FailedCheck(CheckRecord):
    witness: Any = None


@dataclass
class Certificate:
    subject: str
    records: list[CheckRecord] = field(default_factory=list)

    def add(self, record: CheckRecord) -> None:
        self.records.append(record)

    def check(self, name: str, holds: bool, detail: str = "", witness: Any = None) -> bool:
        if holds:
            self.add(PassedCheck(name=name, detail=detail))
        else:
            self.add(FailedCheck(name=name, detail=detail, witness=witness))
        return holds

    def passed(self) -> list[PassedCheck]:
        return [r for r in self.records if isinstance(r, PassedCheck)]

    def failed(self) -> list[FailedCheck]:
        return [r for r in self.records if isinstance(r, FailedCheck)]

    @property
    def ok(self) -> bool:
        return not self.failed()

    @property
    def first_failure(self) -> FailedCheck | None:
        failures = self.failed()
        return failures[0] if failures else None

    def __repr__(self):
        passed, failed = len(self.passed()), len(self.failed())
        return f"Certificate({self.subject!r}, {passed} passed, {failed} failed)"
