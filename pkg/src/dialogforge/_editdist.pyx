# Compiled edit-distance kernel: same contract as dialogforge._editdist_py.
from libc.stdlib cimport free, malloc


def edit_distance(unicode a, unicode b, long limit=-1):
    """Unit-cost Levenshtein distance; returns limit+1 once it exceeds limit."""
    cdef unicode tmp
    cdef Py_ssize_t la = len(a), lb = len(b)
    if la < lb:
        tmp = a
        a = b
        b = tmp
        la, lb = lb, la
    if limit >= 0 and la - lb > limit:
        return limit + 1
    if lb == 0:
        if limit >= 0 and la > limit:
            return limit + 1
        return la

    cdef Py_UCS4 *bv = <Py_UCS4 *> malloc(lb * sizeof(Py_UCS4))
    cdef long *prev = <long *> malloc((lb + 1) * sizeof(long))
    cdef long *cur = <long *> malloc((lb + 1) * sizeof(long))
    if bv == NULL or prev == NULL or cur == NULL:
        free(bv); free(prev); free(cur)
        raise MemoryError()

    cdef Py_ssize_t i, j
    cdef long v, up, left, row_min, d
    cdef long *swap
    cdef Py_UCS4 ca
    try:
        for j in range(lb):
            bv[j] = b[j]
        for j in range(lb + 1):
            prev[j] = j
        for i in range(1, la + 1):
            ca = a[i - 1]
            cur[0] = i
            row_min = i
            for j in range(1, lb + 1):
                if ca == bv[j - 1]:
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
            if limit >= 0 and row_min > limit:
                return limit + 1
            swap = prev
            prev = cur
            cur = swap
        d = prev[lb]
        if limit >= 0 and d > limit:
            return limit + 1
        return d
    finally:
        free(bv)
        free(prev)
        free(cur)
