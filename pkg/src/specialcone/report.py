"""Verification reports: ordered residual rows with verdicts, rendered as TSV."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

HEADER = "stage\tcheck\tanchor\tresidual\ttol\tverdict"


@dataclass(frozen=True)
class Row:
    stage: str
    check: str
    anchor: str
    residual: float
    tol: float
    verdict: str  # PASS or FAIL or INFO
    expect: str = "zero"  # zero: residual <= tol; nonzero: residual > tol; info: no verdict

    @property
    def ok(self) -> bool:
        return self.verdict != "FAIL"

    def tsv(self) -> str:
        return "\t".join([self.stage, self.check, self.anchor, f"{self.residual:.3e}", f"{self.tol:.1e}",
                          self.verdict])


def residual(x) -> float:
    a = np.asarray(x, dtype=float)
    if a.size == 0:
        return 0.0
    if not np.all(np.isfinite(a)):
        return float("inf")
    return float(np.abs(a).max())


@dataclass
class VerificationReport:
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    seed: int | None = None

    def add(self, stage: str, check: str, anchor: str, value, tol: float, expect: str = "zero") -> Row:
        r = residual(value)
        if expect == "zero":
            verdict = "PASS" if r <= tol else "FAIL"
        elif expect == "nonzero":
            verdict = "PASS" if r > tol else "FAIL"
        else:
            verdict = "INFO"
        row = Row(stage, check, anchor, r, float(tol), verdict, expect)
        self.rows.append(row)
        return row

    def add_bool(self, stage: str, check: str, anchor: str, ok: bool, value: float = 0.0, tol: float = 0.0) -> Row:
        row = Row(stage, check, anchor, float(value), float(tol), "PASS" if ok else "FAIL", "bool")
        self.rows.append(row)
        return row

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        self.rows.extend(other.rows)
        return self

    @property
    def passed(self) -> bool:
        return all(r.ok for r in self.rows)

    def failures(self) -> list:
        return [r for r in self.rows if not r.ok]

    def get(self, check: str, stage: str | None = None) -> Row:
        for r in self.rows:
            if r.check == check and (stage is None or r.stage == stage):
                return r
        raise KeyError(check)

    def checks(self) -> list:
        return [r.check for r in self.rows]

    def to_tsv(self) -> str:
        lines = [HEADER] + [r.tsv() for r in self.rows]
        echo = " ".join(f"{k}={v}" for k, v in self.config.items())
        if self.seed is not None:
            echo = (echo + " " if echo else "") + f"seed={self.seed:#x}"
        worst = max((r.residual for r in self.rows if r.expect == "zero"), default=0.0)
        lines.append("\t".join(["summary", f"rows={len(self.rows)} failed={len(self.failures())}", echo,
                                f"{worst:.3e}", "-", "PASS" if self.passed else "FAIL"]))
        return "\n".join(lines) + "\n"

    def __str__(self) -> str:
        return self.to_tsv()


def merge(reports: Iterable[VerificationReport]) -> VerificationReport:
    out = VerificationReport()
    for r in reports:
        out.extend(r)
    return out
