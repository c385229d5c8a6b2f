"""Algebraicity probing over F_p via Cartier section operators.

The section with residue r sends sum a_n X^n to sum a_{pn+r} X^n: it is
the coefficient-side twin of kernel extraction in base p.  A power series
with p-automatic coefficients has a finite closed orbit under all p
sections; orbit growth on truncated data is therefore transcendence
evidence, never proof.  Truncation is tracked by a reliable length that
shrinks by a factor p per section, and two series are only ever compared
on their common reliable window (minimum 32 coefficients), so truncation
can cause an inconclusive verdict but never a false merge.

Coefficient index 0 is always 0: the source tables start at n = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DomainError, ExhaustionError
from .seqgen import ValueTable

MIN_WINDOW = 32


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class FpSeries:
    """Truncated power series over F_p, exact below ``reliable_len``."""

    p: int
    coeffs: np.ndarray
    reliable_len: int

    def __post_init__(self):
        if not _is_prime(self.p):
            raise DomainError(f"p must be prime, got {self.p}")
        if self.reliable_len < 1 or len(self.coeffs) < self.reliable_len:
            raise DomainError("reliable_len must be >= 1 and within the data")
        self.coeffs.flags.writeable = False

    def window(self, length: int) -> np.ndarray:
        return self.coeffs[:length]

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "reliable_len": self.reliable_len,
            "coeffs": [int(c) for c in self.coeffs[: self.reliable_len]],
        }


def series_from_table(t: ValueTable, p: int, N: int) -> FpSeries:
    """Coefficients t(n) mod p for 1 <= n < N; coefficient 0 is 0."""
    if not _is_prime(p):
        raise DomainError(f"p must be prime, got {p}")
    if N < 2:
        raise DomainError(f"series length must be >= 2, got {N}")
    if N - 1 > t.N:
        raise CapacityError(f"series length {N} needs table values up to {N - 1}, "
                            f"table holds {t.N}")
    coeffs = np.zeros(N, dtype=np.int64)
    coeffs[1:] = np.mod(t.values[1:N], p)
    return FpSeries(p=p, coeffs=coeffs, reliable_len=N)


def cartier_section(S: FpSeries, r: int, min_window: int = MIN_WINDOW) -> FpSeries:
    """coeffs'[n] = coeffs[p n + r]; the reliable window shrinks by 1/p."""
    if not 0 <= r < S.p:
        raise DomainError(f"section residue must satisfy 0 <= r < {S.p}, got {r}")
    if S.reliable_len < S.p:
        raise ExhaustionError(
            f"series with reliable length {S.reliable_len} cannot be sectioned "
            f"by p = {S.p}"
        )
    new_len = (S.reliable_len - r) // S.p
    if new_len < min_window:
        raise ExhaustionError(
            f"section would leave {new_len} reliable coefficients, below the "
            f"minimum comparison window {min_window}"
        )
    coeffs = S.coeffs[r : r + S.p * new_len : S.p].copy()
    return FpSeries(p=S.p, coeffs=coeffs, reliable_len=new_len)


@dataclass(frozen=True)
class OrbitReport:
    """Outcome of breadth-first closure under all p sections.

    verdict: "finite" (closed; ``size`` set), "growing" (budget
    exceeded; ``size`` and ``depth`` set), or "inconclusive" (reliable
    window exhausted at ``depth``).  ``window`` is the smallest window
    any comparison used, so the verdict is reproducible.
    """

    verdict: str
    p: int
    budget: int
    size: int
    depth: int
    window: int
    explored: int

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "p": self.p,
            "budget": self.budget,
            "size_or_depth": self.size if self.verdict != "inconclusive" else self.depth,
            "size": self.size,
            "depth": self.depth,
            "window": self.window,
            "explored": self.explored,
        }


def _match(a: FpSeries, b: FpSeries, min_window: int) -> bool | None:
    """Equality on the common reliable window; None when it is too short."""
    w = min(a.reliable_len, b.reliable_len)
    if w < min_window:
        return None
    return bool(np.array_equal(a.coeffs[:w], b.coeffs[:w]))


def orbit_explore(
    S: FpSeries,
    budget: int,
    min_window: int = MIN_WINDOW,
    reverse_sections: bool = False,
) -> OrbitReport:
    """Close {S} under the p sections, within a budget of distinct elements."""
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    if S.reliable_len < min_window * S.p:
        raise DomainError(
            f"need reliable length >= {min_window * S.p} for at least one "
            f"section level, got {S.reliable_len}"
        )
    residues = list(range(S.p))
    if reverse_sections:
        residues.reverse()
    reps: list[FpSeries] = [S]
    frontier: list[tuple[FpSeries, int]] = [(S, 0)]
    smallest_window = S.reliable_len
    max_depth = 0
    explored = 0
    while frontier:
        cur, depth = frontier.pop(0)
        max_depth = max(max_depth, depth)
        for r in residues:
            try:
                child = cartier_section(cur, r, min_window)
            except ExhaustionError:
                return OrbitReport(
                    verdict="inconclusive", p=S.p, budget=budget,
                    size=len(reps), depth=depth, window=smallest_window,
                    explored=explored,
                )
            explored += 1
            new = True
            for rep in reps:
                eq = _match(child, rep, min_window)
                if eq is None:
                    return OrbitReport(
                        verdict="inconclusive", p=S.p, budget=budget,
                        size=len(reps), depth=depth + 1,
                        window=min(child.reliable_len, rep.reliable_len),
                        explored=explored,
                    )
                smallest_window = min(
                    smallest_window, child.reliable_len, rep.reliable_len
                )
                if eq:
                    new = False
                    break
            if new:
                reps.append(child)
                frontier.append((child, depth + 1))
                if len(reps) > budget:
                    return OrbitReport(
                        verdict="growing", p=S.p, budget=budget,
                        size=len(reps), depth=depth + 1,
                        window=smallest_window, explored=explored,
                    )
    return OrbitReport(
        verdict="finite", p=S.p, budget=budget, size=len(reps),
        depth=max_depth, window=smallest_window, explored=explored,
    )


@dataclass(frozen=True)
class AlgebraicityVerdict:
    kind: str  # algebraic_evidence | transcendence_evidence | inconclusive
    size: int | None
    depth: int | None
    count: int | None
    window: int
    text: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "size": self.size,
            "depth": self.depth,
            "count": self.count,
            "window": self.window,
            "text": self.text,
        }


def algebraicity_verdict(report: OrbitReport) -> AlgebraicityVerdict:
    """Map an orbit report onto the evidence scale.

    Finite closed orbit is the algebraic/automatic side; orbit growth is
    transcendence evidence.  The text always cites the comparison window
    so the claim can be reproduced.
    """
    if report.verdict == "finite":
        return AlgebraicityVerdict(
            kind="algebraic_evidence", size=report.size, depth=None, count=None,
            window=report.window,
            text=(
                f"orbit closed at {report.size} series over F_{report.p} "
                f"(windows >= {report.window} coefficients)"
            ),
        )
    if report.verdict == "growing":
        return AlgebraicityVerdict(
            kind="transcendence_evidence", size=None, depth=report.depth,
            count=report.size, window=report.window,
            text=(
                f"orbit exceeded budget {report.budget} with {report.size} "
                f"distinct series at depth {report.depth} over F_{report.p} "
                f"(windows >= {report.window} coefficients)"
            ),
        )
    return AlgebraicityVerdict(
        kind="inconclusive", size=None, depth=report.depth, count=None,
        window=report.window,
        text=(
            f"reliable window fell below {MIN_WINDOW} coefficients at depth "
            f"{report.depth}; no verdict"
        ),
    )


def series_to_json_str(S: FpSeries) -> str:
    return json.dumps(S.to_json())
