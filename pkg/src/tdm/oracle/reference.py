"""Published reference values of the limiting cumulants for v <= 5, kappa_i <= 3.

Only index tuples in non-decreasing order are listed; ``alpha`` is symmetric
under permutations of ``kappa``.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping

from ..seriesx import CumulantRecord

_TABLE: dict[int, dict[tuple[int, ...], int]] = {
    1: {(1,): 1, (2,): 2, (3,): 6},
    2: {
        (1, 1): 4,
        (1, 2): 24,
        (1, 3): 132,
        (2, 2): 160,
        (2, 3): 936,
        (3, 3): 5700,
    },
    3: {
        (1, 1, 1): 96,
        (1, 1, 2): 848,
        (1, 1, 3): 6192,
        (1, 2, 2): 7488,
        (1, 2, 3): 54672,
        (2, 2, 2): 66112,
        (1, 3, 3): 399168,
        (2, 3, 3): 3524112,
        (3, 3, 3): 25729488,
    },
    4: {
        (1, 1, 1, 1): 5088,
        (1, 1, 1, 2): 54720,
        (1, 1, 1, 3): 471552,
        (1, 1, 2, 2): 569600,
        (1, 1, 2, 3): 4794624,
        (1, 2, 2, 2): 5792256,
        (1, 1, 3, 3): 39648672,
        (1, 2, 2, 3): 47903616,
        (2, 2, 2, 2): 57876480,
        (1, 2, 3, 3): 390733632,
        (2, 2, 2, 3): 472119552,
        (1, 3, 3, 3): 3152001600,
        (2, 2, 3, 3): 3808797696,
        (2, 3, 3, 3): 30449851776,
        (3, 3, 3, 3): 241601800032,
    },
    5: {
        (1, 1, 1, 1, 1): 437760,
        (1, 1, 1, 1, 2): 5303808,
        (1, 1, 1, 1, 3): 50969088,
        (1, 1, 1, 2, 2): 61526016,
        (1, 1, 1, 2, 3): 572001408,
        (1, 1, 2, 2, 2): 690596352,
        (1, 1, 1, 3, 3): 5180744448,
        (1, 1, 2, 2, 3): 6255820800,
        (1, 2, 2, 2, 2): 7553912832,
        (1, 1, 2, 3, 3): 55488939264,
        (1, 2, 2, 2, 3): 67011268608,
        (2, 2, 2, 2, 2): 80925462528,
        (1, 1, 3, 3, 3): 483746017536,
        (1, 2, 2, 3, 3): 584256789504,
        (1, 2, 3, 3, 3): 5020755622272,
        (2, 2, 2, 3, 3): 6064431920640,
        (1, 3, 3, 3, 3): 42618105345024,
        (2, 2, 3, 3, 3): 51481144857600,
        (2, 3, 3, 3, 3): 432425796811774,
        (3, 3, 3, 3, 3): 3599012231119850,
    },
}

# Printed entries that disagree with the exact value, mapped to the exact value.
# Both the point engine and the fully symbolic engine give the values below;
# they are divisible by 2**10 like every neighbouring v = 5 entry, while the
# printed ones are only even.  The engine value is authoritative and both are
# reported side by side.
KNOWN_DISCREPANCIES: Mapping[tuple[int, tuple[int, ...]], int] = MappingProxyType(
    {
        (5, (2, 3, 3, 3, 3)): 432425796811776,
        (5, (3, 3, 3, 3, 3)): 3599012231119872,
    }
)


@dataclass(frozen=True)
class ReferenceTable:
    """Immutable view of the published values."""

    entries: Mapping[int, Mapping[tuple[int, ...], int]]

    def lookup(self, v: int, kappa: tuple[int, ...]) -> int:
        if len(kappa) != v:
            raise KeyError(f"kappa {kappa} does not have length {v}")
        return self.entries[v][tuple(sorted(kappa))]

    def __contains__(self, key) -> bool:
        v, kappa = key
        return v in self.entries and tuple(sorted(kappa)) in self.entries[v]

    @property
    def records(self) -> list[CumulantRecord]:
        return [CumulantRecord(v, k, a, "TABLE") for v, rows in sorted(self.entries.items()) for k, a in rows.items()]

    def __iter__(self) -> Iterator[CumulantRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return sum(len(rows) for rows in self.entries.values())

    def with_override(self, v: int, kappa: tuple[int, ...], alpha: int) -> "ReferenceTable":
        """Copy with one entry replaced (used to self-test the verification harness)."""
        rows = {w: dict(r) for w, r in self.entries.items()}
        rows[v][tuple(sorted(kappa))] = alpha
        return ReferenceTable(_freeze(rows))


def _freeze(rows: dict) -> Mapping:
    return MappingProxyType({v: MappingProxyType(dict(r)) for v, r in rows.items()})


_REFERENCE = ReferenceTable(_freeze(_TABLE))


def reference_table() -> ReferenceTable:
    return _REFERENCE
