"""Pure-Python edit-distance kernel (fallback for the compiled extension)."""

from __future__ import annotations


def edit_distance(a: str, b: str, limit: int = -1) -> int:
    """Unit-cost Levenshtein distance over Unicode scalar values.

    With ``limit >= 0`` the scan aborts and returns ``limit + 1`` as soon as
    the true distance provably exceeds ``limit``; callers must treat any
    result ``> limit`` as "too far", not as an exact distance.
    """
    la, lb = len(a), len(b)
    if la < lb:
        a, b, la, lb = b, a, lb, la
    if limit >= 0 and la - lb > limit:
        return limit + 1
    if lb == 0:
        if limit >= 0 and la > limit:
            return limit + 1
        return la

    prev = list(range(lb + 1))
    cur = [0] * (lb + 1)
    for i in range(1, la + 1):
        ca = a[i - 1]
        cur[0] = i
        row_min = i
        for j in range(1, lb + 1):
            if ca == b[j - 1]:
                v = prev[j - 1]
            else:
                v = prev[j - 1] + 1
            up = prev[j] + 1
            if up < v:
                v = up
            left = cur[j - 1] + 1
            if left < v:
                v = left
            cur[j] = v
            if v < row_min:
                row_min = v
        # every path to the final cell crosses this row, so row_min bounds it
        if limit >= 0 and row_min > limit:
            return limit + 1
        prev, cur = cur, prev

    d = prev[lb]
    if limit >= 0 and d > limit:
        return limit + 1
    return d
