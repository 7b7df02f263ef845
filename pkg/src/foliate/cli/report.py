"""Report documents: JSON form and the text rendering derived from it.

The text report is always rendered from the JSON-shaped dictionary, so
re-rendering a saved JSON report reproduces the original text exactly.
"""

from __future__ import annotations

import json
import math

from ..verify import CheckResult, aggregate_status


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def check_to_json(result: CheckResult) -> dict:
    d = result.to_dict()
    for key in ("max_residual", "magnitude_scale", "tol_abs", "tol_rel"):
        d[key] = _finite(d[key])
    if d["worst_point"] is not None:
        d["worst_point"] = [_finite(x) for x in d["worst_point"]]
    return d


def task_entry(index: int, name: str, results: list[CheckResult]) -> dict:
    status = aggregate_status(r.status for r in results)
    finite = [r for r in results if math.isfinite(r.max_abs_residual)]
    worst = max(finite, key=lambda r: r.max_abs_residual) if finite else None
    return {
        "index": index,
        "name": name,
        "status": status,
        "max_residual": worst.max_abs_residual if worst else None,
        "worst_point": list(worst.worst_point) if worst and worst.worst_point else None,
        "points_used": min((r.points_used for r in results), default=0),
        "checks": [check_to_json(r) for r in results],
    }


def build_report(manifest_name: str, digest: str, sampling, tasks: list[dict],
                 elapsed_ms: int | None = None) -> dict:
    doc = {
        "manifest": manifest_name,
        "manifest_sha256": digest,
        "sampling": {"points": sampling.points, "seed": sampling.seed,
                     "tol_abs": sampling.tol_abs, "tol_rel": sampling.tol_rel},
        "overall": aggregate_status(t["status"] for t in tasks),
        "tasks": tasks,
    }
    if elapsed_ms is not None:
        doc["elapsed_ms"] = elapsed_ms
    return doc


def to_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _num(x) -> str:
    return "n/a" if x is None else f"{x:.3e}"


def render_text(doc: dict) -> str:
    s = doc["sampling"]
    lines = [
        f"manifest: {doc['manifest']}",
        f"sha256:   {doc['manifest_sha256']}",
        f"sampling: points={s['points']} seed={s['seed']} "
        f"tol_abs={s['tol_abs']!r} tol_rel={s['tol_rel']!r}",
        "",
    ]
    for task in doc["tasks"]:
        lines.append(f"[{task['index']}] {task['name']}: {task['status']}")
        for c in task["checks"]:
            lines.append(
                f"    {c['status']:<12} {c['name']:<36} residual={_num(c['max_residual'])} "
                f"scale={_num(c['magnitude_scale'])} points={c['points_used']} "
                f"rejected={c['points_rejected']}")
            if c["status"] != "PASS" and c["worst_point"] is not None:
                point = ", ".join("n/a" if x is None else f"{x:.6g}" for x in c["worst_point"])
                lines.append(f"    {'':<12} worst point ({point})")
            if c.get("note"):
                lines.append(f"    {'':<12} note: {c['note']}")
    lines.append("")
    lines.append(f"overall: {doc['overall']}")
    if "elapsed_ms" in doc:
        lines.append(f"elapsed_ms: {doc['elapsed_ms']}")
    return "\n".join(lines) + "\n"
