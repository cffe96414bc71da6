"""Source coordinates shared by every stage of the pipeline.

All positions are 1-based. A span always names the file it came from so
that findings can be pinpointed back to the text the student wrote.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class SourceSpan:
    file: str
    line_start: int
    col_start: int
    line_end: int
    col_end: int

    def __post_init__(self) -> None:
        if self.line_start < 1 or self.col_start < 1 or self.line_end < 1 or self.col_end < 1:
            raise ValueError(f"span coordinates must be positive: {self}")
        if self.line_start > self.line_end:
            raise ValueError(f"span ends before it starts: {self}")
        if self.line_start == self.line_end and self.col_start > self.col_end:
            raise ValueError(f"span ends before it starts: {self}")

    def contains(self, other: "SourceSpan") -> bool:
        return (self.line_start, self.col_start) <= (other.line_start, other.col_start) and (
            other.line_end,
            other.col_end,
        ) <= (self.line_end, self.col_end)

    def contains_line(self, line: int) -> bool:
        return self.line_start <= line <= self.line_end

    def __str__(self) -> str:
        return f"{self.file}:{self.line_start}:{self.col_start}"


def span_hull(spans: list[SourceSpan]) -> SourceSpan:
    """Smallest span covering every span in the list (all from one file)."""
    if not spans:
        raise ValueError("cannot take hull of no spans")
    first = min(spans, key=lambda s: (s.line_start, s.col_start))
    last = max(spans, key=lambda s: (s.line_end, s.col_end))
    return SourceSpan(first.file, first.line_start, first.col_start, last.line_end, last.col_end)
