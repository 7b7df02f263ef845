"""numpy implementation of the program evaluator, vectorised over points."""

import numpy as np


def eval_program(ops, arg_a, arg_b, consts, outputs, points):
    n_points = points.shape[0]
    n_instr = len(ops)
    regs = np.empty((n_instr, n_points))
    bad_instr = np.full(n_points, -1, dtype=np.int32)
    with np.errstate(all="ignore"):
        for k in range(n_instr):
            op = ops[k]
            a = arg_a[k]
            b = arg_b[k]
            invalid = None
            if op == 0:
                regs[k] = consts[k]
                continue
            if op == 1:
                regs[k] = points[:, a]
                continue
            x = regs[a]
            if op == 2:
                r = x + regs[b]
            elif op == 3:
                r = x - regs[b]
            elif op == 4:
                r = x * regs[b]
            elif op == 5:
                y = regs[b]
                invalid = y == 0.0
                r = x / y
            elif op == 6:
                r = -x
            elif op == 7:
                e = consts[k]
                if float(e).is_integer():
                    invalid = (x == 0.0) & (e < 0)
                else:
                    invalid = (x < 0.0) | ((x == 0.0) & (e < 0))
                r = np.power(x, e)
            elif op == 8:
                r = np.sin(x)
            elif op == 9:
                r = np.cos(x)
            elif op == 10:
                r = np.exp(x)
            elif op == 11:
                invalid = x <= 0.0
                r = np.log(x)
            elif op == 12:
                invalid = x < 0.0
                r = np.sqrt(x)
            else:
                raise ValueError(f"unknown opcode {op}")
            fail = ~np.isfinite(r)
            if invalid is not None:
                fail |= invalid
            # only the first failing instruction per point is recorded
            new = fail & (bad_instr < 0) & np.isfinite(x)
            if b >= 0:
                new &= np.isfinite(regs[b])
            bad_instr[new] = k
            regs[k] = r
    values = regs[outputs].T.copy() if len(outputs) else np.empty((n_points, 0))
    return values, bad_instr
