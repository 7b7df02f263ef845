"""Straight-line programs compiled from expression DAGs.

A program lists every distinct node reachable from a set of roots in
children-first order; instruction ``k`` writes register ``k``.  Evaluation
over a batch of points is the hot loop of every sampled check, so it runs
in the compiled ``_kernels`` extension when available and in the numpy
fallback otherwise.  Set ``FOLIATE_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _fallback
from .expr import ScalarExpr, topological

OPCODES = {
    "const": 0, "var": 1, "add": 2, "sub": 3, "mul": 4, "div": 5, "neg": 6,
    "pow": 7, "sin": 8, "cos": 9, "exp": 10, "ln": 11, "sqrt": 12,
}

_REASONS = {
    5: "division by zero",
    7: "invalid power",
    11: "ln of a non-positive value",
    12: "sqrt of a negative value",
}

try:
    if os.environ.get("FOLIATE_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from ._kernels import eval_program as _compiled_eval
    BACKEND = "compiled"
except ImportError:
    _compiled_eval = None
    BACKEND = "python"


def _eval_python(ops, arg_a, arg_b, consts, outputs, points):
    return _fallback.eval_program(ops, arg_a, arg_b, consts, outputs, points)


BACKENDS = {"python": _eval_python}
if _compiled_eval is not None:
    BACKENDS["compiled"] = _compiled_eval


class Program:
    __slots__ = ("nodes", "ops", "arg_a", "arg_b", "consts", "outputs")

    def __init__(self, nodes, ops, arg_a, arg_b, consts, outputs):
        self.nodes = nodes
        self.ops = ops
        self.arg_a = arg_a
        self.arg_b = arg_b
        self.consts = consts
        self.outputs = outputs

    def __len__(self):
        return len(self.nodes)

    @property
    def max_var_index(self) -> int:
        var_op = OPCODES["var"]
        mask = self.ops == var_op
        return int(self.arg_a[mask].max()) if mask.any() else -1

    def evaluate(self, points, backend: str | None = None):
        """Evaluate every output at every point.

        Returns ``(values, bad, bad_instr)``: values has shape
        ``(n_points, n_outputs)``; ``bad[p]`` flags points where some
        instruction failed and ``bad_instr[p]`` is the first such
        instruction (-1 when the point is fine).
        """
        pts = np.ascontiguousarray(np.asarray(points, dtype=np.float64))
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if pts.shape[1] <= self.max_var_index:
            raise ValueError(
                f"points have {pts.shape[1]} coordinates, expression uses index {self.max_var_index}")
        fn = BACKENDS[backend or BACKEND]
        values, bad_instr = fn(self.ops, self.arg_a, self.arg_b, self.consts, self.outputs, pts)
        values = np.asarray(values)
        bad_instr = np.asarray(bad_instr)
        return values, bad_instr >= 0, bad_instr

    def reason(self, instr: int) -> str:
        return _REASONS.get(int(self.ops[instr]), "non-finite value")


def compile_roots(roots: list[ScalarExpr]) -> Program:
    nodes = topological(*roots)
    slot = {id(n): k for k, n in enumerate(nodes)}
    n = len(nodes)
    ops = np.empty(n, dtype=np.int32)
    arg_a = np.full(n, -1, dtype=np.int32)
    arg_b = np.full(n, -1, dtype=np.int32)
    consts = np.zeros(n, dtype=np.float64)
    for k, node in enumerate(nodes):
        ops[k] = OPCODES[node.op]
        if node.op == "const":
            consts[k] = node.data
        elif node.op == "var":
            arg_a[k] = node.data[0]
        else:
            arg_a[k] = slot[id(node.args[0])]
            if len(node.args) == 2:
                arg_b[k] = slot[id(node.args[1])]
            if node.op == "pow":
                consts[k] = node.data
    outputs = np.array([slot[id(r)] for r in roots], dtype=np.int32)
    return Program(nodes, ops, arg_a, arg_b, consts, outputs)
