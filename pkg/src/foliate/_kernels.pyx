# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluator for straight-line expression programs.

Points are processed in blocks: each instruction runs over a whole block
before the next one starts, so opcode dispatch is paid once per block and
the inner loops are simple enough for the C compiler to vectorise.  A point
is flagged at the first instruction (in program order) that fails for it.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, log, sqrt, pow, isfinite, floor, NAN

cnp.import_array()

cdef enum:
    BLOCK = 64


def eval_program(const int[::1] ops, const int[::1] arg_a, const int[::1] arg_b,
                 const double[::1] consts, const int[::1] outputs,
                 const double[:, ::1] points):
    cdef Py_ssize_t n_points = points.shape[0]
    cdef Py_ssize_t n_instr = ops.shape[0]
    cdef Py_ssize_t n_out = outputs.shape[0]
    values_arr = np.full((n_points, n_out), np.nan)
    bad_arr = np.full(n_points, -1, dtype=np.int32)
    regs_arr = np.empty((max(n_instr, 1), BLOCK))
    cdef double[:, ::1] values = values_arr
    cdef int[::1] bad = bad_arr
    cdef double[:, ::1] r = regs_arr
    cdef Py_ssize_t start, size, i, k, j
    cdef int op, a, b
    cdef double x, y, e, v
    cdef bint fail, integral
    start = 0
    with nogil:
        while start < n_points:
            size = min(<Py_ssize_t>BLOCK, n_points - start)
            for k in range(n_instr):
                op = ops[k]
                a = arg_a[k]
                b = arg_b[k]
                if op == 0:
                    for i in range(size):
                        r[k, i] = consts[k]
                    continue
                if op == 1:
                    for i in range(size):
                        r[k, i] = points[start + i, a]
                    continue
                if op == 2:
                    for i in range(size):
                        r[k, i] = r[a, i] + r[b, i]
                elif op == 3:
                    for i in range(size):
                        r[k, i] = r[a, i] - r[b, i]
                elif op == 4:
                    for i in range(size):
                        r[k, i] = r[a, i] * r[b, i]
                elif op == 6:
                    for i in range(size):
                        r[k, i] = -r[a, i]
                elif op == 5:
                    for i in range(size):
                        y = r[b, i]
                        if y == 0.0:
                            r[k, i] = NAN
                            if bad[start + i] < 0 and isfinite(r[a, i]):
                                bad[start + i] = <int>k
                        else:
                            r[k, i] = r[a, i] / y
                elif op == 7:
                    e = consts[k]
                    integral = floor(e) == e
                    for i in range(size):
                        x = r[a, i]
                        if (x == 0.0 and e < 0) or (x < 0.0 and not integral):
                            r[k, i] = NAN
                            if bad[start + i] < 0 and isfinite(x):
                                bad[start + i] = <int>k
                        elif e == 2.0:
                            r[k, i] = x * x
                        else:
                            r[k, i] = pow(x, e)
                elif op == 8:
                    for i in range(size):
                        r[k, i] = sin(r[a, i])
                elif op == 9:
                    for i in range(size):
                        r[k, i] = cos(r[a, i])
                elif op == 10:
                    for i in range(size):
                        r[k, i] = exp(r[a, i])
                elif op == 11:
                    for i in range(size):
                        x = r[a, i]
                        if x <= 0.0:
                            r[k, i] = NAN
                            if bad[start + i] < 0 and isfinite(x):
                                bad[start + i] = <int>k
                        else:
                            r[k, i] = log(x)
                elif op == 12:
                    for i in range(size):
                        x = r[a, i]
                        if x < 0.0:
                            r[k, i] = NAN
                            if bad[start + i] < 0 and isfinite(x):
                                bad[start + i] = <int>k
                        else:
                            r[k, i] = sqrt(x)
                else:
                    for i in range(size):
                        r[k, i] = NAN
                        if bad[start + i] < 0:
                            bad[start + i] = <int>k
                    continue
                # overflow and other non-finite results, first occurrence only
                for i in range(size):
                    if bad[start + i] < 0 and not isfinite(r[k, i]):
                        bad[start + i] = <int>k
            for i in range(size):
                if bad[start + i] < 0:
                    for j in range(n_out):
                        values[start + i, j] = r[outputs[j], i]
            start += size
    return values_arr, bad_arr
