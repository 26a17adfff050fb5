"""Uniform check records produced by the verification harnesses.

Every check emits records of the shape
{check, params, measured, bound, margin, status, witness}; a report is an
ordered collection of records with pass/fail bookkeeping.
"""

from dataclasses import dataclass, field

PASS = "pass"
FAIL = "fail"
VACUOUS = "vacuous"


@dataclass
class CheckRecord:
    name: str
    params: dict
    measured: float | None
    bound: float | None
    margin: float
    status: str
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": self.params,
            "measured": self.measured,
            "bound": self.bound,
            "margin": self.margin,
            "status": self.status,
            "witness": self.witness,
        }


def record(name, params, measured, bound, margin, ok, witness=None) -> CheckRecord:
    """Build a pass/fail record from a boolean verdict."""
    return CheckRecord(
        name=name,
        params=params,
        measured=None if measured is None else float(measured),
        bound=None if bound is None else float(bound),
        margin=float(margin),
        status=PASS if ok else FAIL,
        witness=witness,
    )


def vacuous(name, params, witness=None) -> CheckRecord:
    """Record for a check whose hypothesis is empty on this input."""
    return CheckRecord(name, params, None, None, 0.0, VACUOUS, witness)


@dataclass
class CheckReport:
    records: list[CheckRecord] = field(default_factory=list)

    def add(self, rec: CheckRecord) -> CheckRecord:
        self.records.append(rec)
        return rec

    def extend(self, other) -> "CheckReport":
        if isinstance(other, CheckReport):
            self.records.extend(other.records)
        else:
            self.records.extend(other)
        return self

    @property
    def passed(self) -> bool:
        return all(r.status != FAIL for r in self.records)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.status == FAIL]

    def counts(self) -> dict:
        out = {PASS: 0, FAIL: 0, VACUOUS: 0}
        for r in self.records:
            out[r.status] = out.get(r.status, 0) + 1
        return out

    def to_dicts(self) -> list[dict]:
        return [r.to_dict() for r in self.records]
