"""Small shared helpers."""

from __future__ import annotations

from .errors import AnomscopeError


def split_spans(total: int, parts: int) -> list[tuple[int, int]]:
    """Split ``total`` items into ``parts`` contiguous half-open spans.

    Every span gets ``total // parts`` items except the last, which also
    absorbs the remainder. Spans must be non-empty.
    """
    if parts < 1:
        raise AnomscopeError(f"grid must have at least 1 cell per axis, got {parts}")
    base = total // parts
    if base < 1:
        raise AnomscopeError(
            f"grid too fine: cannot split {total} pixels into {parts} non-empty spans"
        )
    bounds = [(i * base, (i + 1) * base) for i in range(parts)]
    bounds[-1] = ((parts - 1) * base, total)
    return bounds
