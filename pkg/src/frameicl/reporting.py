"""Report tables from run records.

Per experiment (``<out>/<name>/``):

curve.csv        one row per model x shot count x scope
best.csv         best shot count per model and scope, as "(shots) F1"
attributes.csv   per-attribute best "(shots) F1", one column per model
summary.json     everything above at full precision

Across experiments, ``<out>/ablation.csv`` is written when records with
more than one ablation level are present. Columns a-d are: no frame info
(zero-shot), frame definitions only (zero-shot), full frame information
(zero-shot) and full frame information at the best shot count.

F1 in CSV files is a percentage with one decimal. Files contain no
timestamps, so equal records give byte-identical reports.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .prompts import AblationLevel
from .runner import MODE_SCOPES, RunRecord, TaskMode

ABLATION_COLUMNS = (
    ("a", AblationLevel.NO_FRAME_INFO),
    ("b", AblationLevel.FRAME_DEF_ONLY),
    ("c", AblationLevel.FULL_FRAME_INFO),
)


def pct(x: float) -> str:
    return f"{100 * x:.1f}"


def best_shot(points) -> tuple[list[int], float]:
    """``points`` is [(shots, f1)]; returns all shot counts reaching the max F1."""
    if not points:
        raise ValueError("no points")
    top = max(f for _, f in points)
    return sorted(s for s, f in points if f == top), top


def format_best(shots, f1: float) -> str:
    return f"({', '.join(str(s) for s in shots)}) {pct(f1)}"


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _models(record: RunRecord) -> list[str]:
    return list(record.spec["model_ids"])


def curve_rows(record: RunRecord):
    for model_id, shots, scope, rep, fails in record.report_rows():
        warn = ";".join(f"{k}={v}" for k, v in fails["warnings"].items())
        yield [model_id, shots, scope, rep.tp, rep.fp, rep.fn,
               pct(rep.precision), pct(rep.recall), pct(rep.f1), fails["refusals"], warn]


def best_table(record: RunRecord) -> dict:
    """{model: {scope: (shots list, f1)}} over the record's scopes."""
    scopes = MODE_SCOPES[record.task_mode]
    out = {}
    for model in _models(record):
        out[model] = {}
        for scope in scopes:
            pts = [(k, rep.f1) for m, k, s, rep, _ in record.report_rows() if m == model and s == scope]
            if pts:
                out[model][scope] = best_shot(pts)
    return out


def attribute_table(record: RunRecord) -> dict:
    """{attribute: {model: (shots list, f1)}} from the headline scope's per-attribute counts."""
    scope = MODE_SCOPES[record.task_mode][0]
    points: dict = {}
    for model, k, s, rep, _ in record.report_rows():
        if s != scope:
            continue
        for attr, c in rep.per_attribute.items():
            points.setdefault(attr, {}).setdefault(model, []).append((k, c.f1))
    return {a: {m: best_shot(p) for m, p in by_model.items()} for a, by_model in sorted(points.items())}


def _summary(record: RunRecord) -> dict:
    rows = []
    for model, k, scope, rep, fails in record.report_rows():
        rows.append({
            "model_id": model, "shots": k, "scope": scope, "tp": rep.tp, "fp": rep.fp, "fn": rep.fn,
            "precision": rep.precision, "recall": rep.recall, "f1": rep.f1,
            "per_attribute": {a: c.as_dict() for a, c in rep.per_attribute.items()},
            "failures": fails,
        })
    best = {m: {s: {"shots": sh, "f1": f} for s, (sh, f) in v.items()} for m, v in best_table(record).items()}
    return {
        "name": record.name,
        "task_mode": record.task_mode.value,
        "ablation": record.spec["ablation"],
        "stage1_source": record.stage1_source,
        "record_digest": record.digest(),
        "rows": rows,
        "best": best,
    }


def write_record_report(record: RunRecord, out_dir) -> list[Path]:
    out = Path(out_dir) / record.name
    out.mkdir(parents=True, exist_ok=True)
    written = []

    header = ["model_id", "shots", "scope", "tp", "fp", "fn", "precision", "recall", "f1", "refusals", "warnings"]
    written.append(_write(out / "curve.csv", _csv(curve_rows(record), header)))

    scopes = MODE_SCOPES[record.task_mode]
    best = best_table(record)
    rows = [[m] + [format_best(*best[m][s]) if s in best[m] else "" for s in scopes] for m in _models(record)]
    written.append(_write(out / "best.csv", _csv(rows, ["model_id", *scopes])))

    if record.task_mode is not TaskMode.FI_ONLY:
        models = _models(record)
        attrs = attribute_table(record)
        rows = [[a] + [format_best(*v[m]) if m in v else "" for m in models] for a, v in attrs.items()]
        written.append(_write(out / "attributes.csv", _csv(rows, ["attribute", *models])))

    written.append(_write(out / "summary.json", json.dumps(_summary(record), indent=1, sort_keys=True) + "\n"))
    return written


def ablation_table(records) -> list[list[str]]:
    """Rows (task_mode, model, a, b, c, d) for records of tasks run at several ablation levels."""
    by_task: dict = {}
    for r in records:
        by_task.setdefault(r.task_mode, []).append(r)
    rows = []
    for mode in TaskMode:
        group = by_task.get(mode, [])
        if len({r.spec["ablation"] for r in group}) < 2:
            continue
        scope = MODE_SCOPES[mode][0]
        cells: dict = {}
        for r in group:
            level = r.spec["ablation"]
            for model, k, s, rep, _ in r.report_rows():
                if s != scope:
                    continue
                cells.setdefault(model, {}).setdefault(level, []).append((k, rep.f1))
        for model in sorted(cells):
            pts = cells[model]
            row = [mode.value, model]
            for _, level in ABLATION_COLUMNS:
                zero = [f for k, f in pts.get(level.value, []) if k == 0]
                row.append(pct(zero[0]) if zero else "")
            full = pts.get(AblationLevel.FULL_FRAME_INFO.value, [])
            row.append(format_best(*best_shot(full)) if full else "")
            rows.append(row)
    return rows


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def report(records, out_dir) -> list[Path]:
    """Write all report files for ``records`` into ``out_dir``; returns the paths written."""
    records = list(records)
    if not records:
        raise ValueError("report needs at least one record")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for r in sorted(records, key=lambda r: r.name):
        written.extend(write_record_report(r, out_dir))
    rows = ablation_table(records)
    if rows:
        written.append(_write(out_dir / "ablation.csv", _csv(rows, ["task_mode", "model_id", "a", "b", "c", "d"])))
    return written


__all__ = ["ablation_table", "attribute_table", "best_shot", "best_table", "format_best", "pct", "report"]
