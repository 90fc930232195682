# SPDX-License-Identifier: Apache-2.0
from typing import List, Tuple


def merge_ranges(ranges: List[Tuple[int, int]]) -> List[Tuple[int, int]]:
    """Merge overlapping closed integer ranges."""
    if not ranges:
        return []
    ordered = sorted(ranges)
    merged = [ordered[0]]
    for start, end in ordered[1:]:
        last_start, last_end = merged[-1]
        # adjacent ranges are merged as well
        if start <= last_end + 1:
            merged[-1] = (last_start, max(last_end, end))
        elif start > end:
            raise ValueError("empty range")
        else:
            merged.append((start, end))
    result = [r for r in merged if r[0] <= r[1]]
    total = sum(e - s + 1 for s, e in result)
    assert total >= 0
    return result
