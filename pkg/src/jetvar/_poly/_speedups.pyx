# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled polynomial kernel.

Same data representation and semantics as ``pure.py``; see that module for
the format contract. Coefficients stay arbitrary-precision Python ints, the
win comes from compiled loop and tuple management.
"""

from math import gcd

BACKEND = "c"

ONE_MONO = ()


cpdef tuple rat(num, den):
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    if num == 0:
        return (0, 1)
    if den < 0:
        num = -num
        den = -den
    g = gcd(num, den)
    if g > 1:
        num //= g
        den //= g
    return (num, den)


cpdef tuple rat_add(tuple a, tuple b):
    return rat(a[0] * b[1] + b[0] * a[1], a[1] * b[1])


cpdef tuple rat_mul(tuple a, tuple b):
    return rat(a[0] * b[0], a[1] * b[1])


cpdef dict poly_const(num, den=1):
    cdef tuple c = rat(num, den)
    if c[0] == 0:
        return {}
    return {ONE_MONO: c}


cpdef dict poly_atom(aid, exp=1):
    return {((aid, exp),): (1, 1)}


cpdef bint poly_is_const(dict p):
    return (not p) or (len(p) == 1 and ONE_MONO in p)


cpdef tuple mono_mul(tuple m1, tuple m2):
    if not m1:
        return m2
    if not m2:
        return m1
    cdef list out = []
    cdef Py_ssize_t i = 0, j = 0, n1 = len(m1), n2 = len(m2)
    cdef tuple p1, p2
    while i < n1 and j < n2:
        p1 = m1[i]
        p2 = m2[j]
        if p1[0] == p2[0]:
            out.append((p1[0], p1[1] + p2[1]))
            i += 1
            j += 1
        elif p1[0] < p2[0]:
            out.append(p1)
            i += 1
        else:
            out.append(p2)
            j += 1
    while i < n1:
        out.append(m1[i])
        i += 1
    while j < n2:
        out.append(m2[j])
        j += 1
    return tuple(out)


cpdef mono_degree(tuple m):
    cdef Py_ssize_t i
    d = 0
    for i in range(len(m)):
        d += m[i][1]
    return d


cdef inline void _accumulate(dict out, tuple m, tuple c):
    prev = out.get(m)
    if prev is None:
        out[m] = c
    else:
        s = rat_add(<tuple> prev, c)
        if s[0] == 0:
            del out[m]
        else:
            out[m] = s


cpdef dict poly_add(dict a, dict b):
    if not a:
        return dict(b)
    if not b:
        return dict(a)
    cdef dict out = dict(a)
    for m, c in b.items():
        _accumulate(out, <tuple> m, <tuple> c)
    return out


cpdef dict poly_neg(dict a):
    cdef dict out = {}
    for m, c in a.items():
        out[m] = (-c[0], c[1])
    return out


cpdef dict poly_sub(dict a, dict b):
    return poly_add(a, poly_neg(b))


cpdef dict poly_scale(dict a, num, den=1):
    cdef tuple c = rat(num, den)
    if c[0] == 0:
        return {}
    cdef dict out = {}
    for m, v in a.items():
        out[m] = rat_mul(<tuple> v, c)
    return out


cpdef dict poly_mul(dict a, dict b):
    if not a or not b:
        return {}
    if poly_is_const(a):
        c = a[ONE_MONO]
        return poly_scale(b, c[0], c[1])
    if poly_is_const(b):
        c = b[ONE_MONO]
        return poly_scale(a, c[0], c[1])
    cdef dict out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            _accumulate(
                out,
                mono_mul(<tuple> m1, <tuple> m2),
                rat(c1[0] * c2[0], c1[1] * c2[1]),
            )
    return out


cpdef dict poly_pow(dict a, k):
    if k < 0:
        raise ValueError("negative exponent in poly_pow")
    cdef dict result = {ONE_MONO: (1, 1)}
    cdef dict base = a
    while k:
        if k & 1:
            result = poly_mul(result, base)
        k >>= 1
        if k:
            base = poly_mul(base, base)
    return result


cpdef dict poly_diff(dict a, aid):
    cdef dict out = {}
    cdef Py_ssize_t pos
    cdef tuple m, pair, nm
    for m_, c in a.items():
        m = <tuple> m_
        for pos in range(len(m)):
            pair = m[pos]
            if pair[0] != aid:
                continue
            if pair[1] == 1:
                nm = m[:pos] + m[pos + 1:]
            else:
                nm = m[:pos] + ((pair[0], pair[1] - 1),) + m[pos + 1:]
            _accumulate(out, nm, rat(c[0] * pair[1], c[1]))
            break
    return out


cpdef set poly_support(dict a):
    cdef set ids = set()
    for m in a:
        for pair in <tuple> m:
            ids.add(pair[0])
    return ids


cpdef dict poly_radial_scale(dict a, degree_shift):
    cdef dict out = {}
    for m, c in a.items():
        d = degree_shift + mono_degree(<tuple> m)
        out[m] = rat(c[0], c[1] * d)
    return out
