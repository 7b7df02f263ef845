"""Seeded random-point sampling and sampled identity checks.

Points come from numpy's PCG64 generator (``Generator(PCG64(seed)).random``),
scaled affinely onto the box, so a given ``(box, n, seed)`` always yields the
same points.  A point where any coefficient fails to evaluate is rejected and
replaced by the next candidate, up to ``4 n`` candidates in total.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import expr as E
from ._program import compile_roots
from .expr import ScalarExpr

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"

DEFAULT_POINTS = 64
DEFAULT_SEED = 42
DEFAULT_TOL_ABS = 1e-9
DEFAULT_TOL_REL = 1e-7


@dataclass(frozen=True)
class SampleBox:
    intervals: tuple[tuple[float, float], ...]

    def __init__(self, intervals: Iterable[Sequence[float]]):
        ivs = tuple((float(lo), float(hi)) for lo, hi in intervals)
        if not ivs:
            raise ValueError("a sample box needs at least one interval")
        for lo, hi in ivs:
            if not lo < hi:
                raise ValueError(f"degenerate interval [{lo}, {hi}]")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def cube(cls, m: int, lo: float = -1.0, hi: float = 1.0) -> "SampleBox":
        return cls([(lo, hi)] * m)

    @property
    def dimension(self) -> int:
        return len(self.intervals)

    def restrict(self, index: int, lo: float, hi: float) -> "SampleBox":
        ivs = list(self.intervals)
        ivs[index] = (lo, hi)
        return SampleBox(ivs)


@dataclass(frozen=True)
class Sampling:
    """Sampling policy shared by a run of checks."""

    points: int = DEFAULT_POINTS
    seed: int = DEFAULT_SEED
    tol_abs: float = DEFAULT_TOL_ABS
    tol_rel: float = DEFAULT_TOL_REL


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    max_abs_residual: float
    magnitude_scale: float
    worst_point: tuple[float, ...] | None
    points_used: int
    points_rejected: int
    tol_abs: float = DEFAULT_TOL_ABS
    tol_rel: float = DEFAULT_TOL_REL
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def renamed(self, name: str) -> "CheckResult":
        return CheckResult(name, self.status, self.max_abs_residual, self.magnitude_scale,
                           self.worst_point, self.points_used, self.points_rejected,
                           self.tol_abs, self.tol_rel, self.note)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "max_residual": self.max_abs_residual,
            "magnitude_scale": self.magnitude_scale,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "points_used": self.points_used,
            "points_rejected": self.points_rejected,
            "tol_abs": self.tol_abs,
            "tol_rel": self.tol_rel,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CheckResult":
        wp = d.get("worst_point")
        return cls(d["name"], d["status"], d["max_residual"], d["magnitude_scale"],
                   tuple(wp) if wp is not None else None, d["points_used"],
                   d["points_rejected"], d["tol_abs"], d["tol_rel"], d.get("note", ""))


@dataclass
class ReportDocument:
    """Ordered collection of check results with an aggregate verdict."""

    name: str
    results: list[CheckResult] = field(default_factory=list)

    @property
    def overall(self) -> str:
        return aggregate_status(r.status for r in self.results)

    def add(self, result: CheckResult) -> CheckResult:
        self.results.append(result)
        return result

    def __getitem__(self, name: str) -> CheckResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"name": self.name, "overall": self.overall,
                "checks": [r.to_dict() for r in self.results]}


def aggregate_status(statuses: Iterable[str]) -> str:
    statuses = list(statuses)
    if any(s == FAIL for s in statuses):
        return FAIL
    if any(s == INCONCLUSIVE for s in statuses):
        return INCONCLUSIVE
    return PASS


def combine(name: str, results: Sequence[CheckResult]) -> CheckResult:
    """Fold several results into one carrying the worst residual."""
    if not results:
        return CheckResult(name, PASS, 0.0, 0.0, None, 0, 0)
    worst = max(results, key=lambda r: r.max_abs_residual)
    return CheckResult(
        name, aggregate_status(r.status for r in results), worst.max_abs_residual,
        max(r.magnitude_scale for r in results), worst.worst_point,
        min(r.points_used for r in results), max(r.points_rejected for r in results),
        worst.tol_abs, worst.tol_rel, "; ".join(r.note for r in results if r.note))


def sample_points(box: SampleBox, n: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """``n`` uniform points in ``box`` from the PCG64 stream for ``seed``."""
    if n < 1:
        raise ValueError("need at least one sample point")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random((n, box.dimension))
    lo = np.array([a for a, _ in box.intervals])
    hi = np.array([b for _, b in box.intervals])
    return lo + u * (hi - lo)


def coefficient_roots(obj) -> list[ScalarExpr]:
    """Every coefficient expression of a field, scalar, or (nested) list thereof."""
    if isinstance(obj, ScalarExpr):
        return [obj]
    if isinstance(obj, (int, float)):
        return [E.const(obj)]
    if hasattr(obj, "coeffs") and hasattr(obj, "degree"):
        return [obj.coeffs[k] for k in sorted(obj.coeffs)]
    if hasattr(obj, "form") and hasattr(obj, "density"):
        return [obj.density]
    if isinstance(obj, (list, tuple)):
        out = []
        for item in obj:
            out.extend(coefficient_roots(item))
        return out
    raise TypeError(f"cannot sample {type(obj).__name__}")


def additive_terms(e: ScalarExpr) -> list[ScalarExpr]:
    """Distinct summands reached through +, - and unary minus."""
    out, seen = [], set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if node.op in ("add", "sub", "neg"):
            stack.extend(node.args)
        else:
            out.append(node)
    return out


def sample_values(roots: Sequence[ScalarExpr], box: SampleBox, n: int = DEFAULT_POINTS,
                  seed: int = DEFAULT_SEED):
    """Evaluate ``roots`` at up to ``n`` accepted sample points.

    Returns ``(points, values, rejected)``.
    """
    prog = compile_roots(list(roots))
    candidates = sample_points(box, 4 * n, seed)
    accepted_pts, accepted_vals = [], []
    rejected = 0
    cursor = 0
    have = 0
    while have < n and cursor < len(candidates):
        batch = candidates[cursor:cursor + (n - have)]
        cursor += len(batch)
        values, bad, _ = prog.evaluate(batch)
        good = ~bad
        rejected += int(bad.sum())
        accepted_pts.append(batch[good])
        accepted_vals.append(values[good])
        have += int(good.sum())
    pts = np.concatenate(accepted_pts) if accepted_pts else np.empty((0, box.dimension))
    vals = np.concatenate(accepted_vals) if accepted_vals else np.empty((0, len(roots)))
    return pts, vals, rejected


def _status(used, rejected, residual, scale, tol_abs, tol_rel):
    total = used + rejected
    if used == 0 or (total and rejected / total > 0.5):
        return INCONCLUSIVE
    return PASS if residual <= tol_abs + tol_rel * scale else FAIL


def check_zero(obj, box: SampleBox, n: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED,
               tol_abs: float = DEFAULT_TOL_ABS, tol_rel: float = DEFAULT_TOL_REL,
               name: str = "zero-check") -> CheckResult:
    """Sampled check that every coefficient of ``obj`` vanishes.

    The residual is judged against the largest additive term of each
    coefficient, so an identity that holds by cancellation is compared with
    the size of what cancelled.
    """
    roots = coefficient_roots(obj)
    if not roots or all(r.is_zero() for r in roots):
        return CheckResult(name, PASS, 0.0, 0.0, None, n, 0, tol_abs, tol_rel)
    terms: list[ScalarExpr] = []
    for r in roots:
        terms.extend(additive_terms(r))
    pts, vals, rejected = sample_values(roots + terms, box, n, seed)
    used = len(pts)
    if used == 0:
        return CheckResult(name, INCONCLUSIVE, float("nan"), float("nan"), None, 0, rejected,
                           tol_abs, tol_rel, "no evaluable sample point")
    res = np.abs(vals[:, :len(roots)])
    per_point = res.max(axis=1)
    worst = int(per_point.argmax())
    residual = float(per_point[worst])
    scale = float(np.abs(vals[:, len(roots):]).max()) if terms else 0.0
    status = _status(used, rejected, residual, scale, tol_abs, tol_rel)
    return CheckResult(name, status, residual, scale, tuple(float(x) for x in pts[worst]),
                       used, rejected, tol_abs, tol_rel)


def check_nonvanishing(f: ScalarExpr, box: SampleBox, n: int = DEFAULT_POINTS,
                       seed: int = DEFAULT_SEED, threshold: float = 1e-10,
                       name: str = "nonvanishing") -> CheckResult:
    """PASS iff ``|f| >= threshold`` at every accepted sample.

    The reported residual is the shortfall ``max(0, threshold - min|f|)``.
    """
    pts, vals, rejected = sample_values([f], box, n, seed)
    used = len(pts)
    if used == 0:
        return CheckResult(name, INCONCLUSIVE, float("nan"), float("nan"), None, 0, rejected,
                           0.0, 0.0, "no evaluable sample point")
    mags = np.abs(vals[:, 0])
    worst = int(mags.argmin())
    shortfall = max(0.0, threshold - float(mags[worst]))
    status = _status(used, rejected, shortfall, 0.0, 0.0, 0.0)
    return CheckResult(name, status, shortfall, float(mags.max()),
                       tuple(float(x) for x in pts[worst]), used, rejected, 0.0, 0.0,
                       f"min |value| = {float(mags[worst]):.6g}")


def check_nonzero(obj, box: SampleBox, n: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED,
                  threshold: float = 1e-6, name: str = "nonzero") -> CheckResult:
    """PASS iff some coefficient of ``obj`` exceeds ``threshold`` at some sample.

    Used for negative expectations; the residual is ``max(0, threshold - max|c|)``.
    """
    roots = coefficient_roots(obj)
    if not roots:
        return CheckResult(name, FAIL, threshold, 0.0, None, n, 0, 0.0, 0.0,
                           "structurally zero")
    pts, vals, rejected = sample_values(roots, box, n, seed)
    used = len(pts)
    if used == 0:
        return CheckResult(name, INCONCLUSIVE, float("nan"), float("nan"), None, 0, rejected,
                           0.0, 0.0, "no evaluable sample point")
    per_point = np.abs(vals).max(axis=1)
    best = int(per_point.argmax())
    shortfall = max(0.0, threshold - float(per_point[best]))
    status = _status(used, rejected, shortfall, 0.0, 0.0, 0.0)
    return CheckResult(name, status, shortfall, float(per_point[best]),
                       tuple(float(x) for x in pts[best]), used, rejected, 0.0, 0.0)
