"""Scores prediction files against a corpus: exact-match accuracy, RMSE on
open-numeric items, chance-corrected agreement, and ability/condition rollups.

Answers are read only from the <answer>...</answer> span of the raw response:
MCA answers are a single option letter, numeric answers a bare number.
Unparseable MCA answers score zero rather than being dropped.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .qa.items import QAItem
from .schema import dumps_canonical

ANSWER_SPAN = re.compile(r"<answer>(.*?)</answer>", re.DOTALL)

RMSE_PLOT_TOLERANCE = {"counting": 10.0, "distance": 25.0}

KAPPA_BANDS = (
    (0.0, "Poor"),
    (0.20, "Slight"),
    (0.40, "Fair"),
    (0.60, "Moderate"),
    (0.80, "Substantial"),
    (1.01, "Almost Perfect"),
)


class PairingError(ValueError):
    pass


@dataclass
class PredictionRecord:
    item_id: str
    responder_id: str
    raw_answer: str

    def parsed(self, answer_type: str):
        """Option index or float, or None when the span is missing/invalid."""
        m = ANSWER_SPAN.search(self.raw_answer)
        if not m:
            return None
        text = m.group(1).strip()
        if answer_type == "option":
            if len(text) == 1 and text.upper().isalpha():
                return ord(text.upper()) - ord("A")
            return None
        try:
            return float(text)
        except ValueError:
            return None


def write_predictions(records: list[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                dumps_canonical(
                    {"item_id": r.item_id, "responder_id": r.responder_id, "raw_answer": r.raw_answer}
                )
                + "\n"
            )


def read_predictions(path: str | Path) -> list[PredictionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = json.loads(line)
                out.append(PredictionRecord(rec["item_id"], rec["responder_id"], rec["raw_answer"]))
    return out


def _pair(items: list[QAItem], preds: list[PredictionRecord]):
    by_id = {p.item_id: p for p in preds}
    if len(by_id) != len(preds):
        raise PairingError("duplicate item_id in predictions")
    missing = [i.item_id for i in items if i.item_id not in by_id]
    if missing:
        raise PairingError(f"predictions missing for {missing[:3]} (+{max(0, len(missing) - 3)} more)")
    return [(item, by_id[item.item_id]) for item in items]


def exact_match_accuracy(items: list[QAItem], preds: list[PredictionRecord]) -> float:
    """Percent of MCA items answered with exactly the right option; items the
    responder leaves unparseable count as wrong."""
    pairs = [(i, p) for i, p in _pair(items, preds) if i.answer_type == "option"]
    if not pairs:
        return 0.0
    correct = sum(1 for item, pred in pairs if pred.parsed("option") == int(item.answer))
    return 100.0 * correct / len(pairs)


@dataclass
class RmseResult:
    value: float
    scored: int
    unparseable: int


def rmse(items: list[QAItem], preds: list[PredictionRecord]) -> RmseResult:
    pairs = [(i, p) for i, p in _pair(items, preds) if i.answer_type == "numeric"]
    errors = []
    unparseable = 0
    for item, pred in pairs:
        value = pred.parsed("numeric")
        if value is None:
            unparseable += 1
            continue
        errors.append((value - float(item.answer)) ** 2)
    value = math.sqrt(sum(errors) / len(errors)) if errors else 0.0
    return RmseResult(value=value, scored=len(errors), unparseable=unparseable)


def cohen_kappa(preds_a: list[PredictionRecord], preds_b: list[PredictionRecord],
                items: list[QAItem]) -> tuple[float, str]:
    """Agreement over shared MCA items; unparseable responses form their own
    category so systematic silence still counts as (dis)agreement."""
    types = {i.item_id: i.answer_type for i in items}
    a_by_id = {p.item_id: p for p in preds_a}
    b_by_id = {p.item_id: p for p in preds_b}
    shared = [
        iid
        for iid in sorted(a_by_id.keys() & b_by_id.keys())
        if types.get(iid) == "option"
    ]
    if not shared:
        raise PairingError("no shared MCA items")

    def category(pred: PredictionRecord):
        value = pred.parsed("option")
        return "invalid" if value is None else value

    labels_a = [category(a_by_id[i]) for i in shared]
    labels_b = [category(b_by_id[i]) for i in shared]
    n = len(shared)
    p_o = sum(1 for x, y in zip(labels_a, labels_b) if x == y) / n
    cats = sorted({*labels_a, *labels_b}, key=str)
    p_e = sum(
        (labels_a.count(c) / n) * (labels_b.count(c) / n) for c in cats
    )
    if math.isclose(p_e, 1.0):
        kappa = 1.0 if math.isclose(p_o, 1.0) else 0.0
    else:
        kappa = (p_o - p_e) / (1 - p_e)
    return kappa, kappa_band(kappa)


def kappa_band(kappa: float) -> str:
    if kappa < 0:
        return "Poor"
    for upper, name in KAPPA_BANDS[1:]:
        if kappa <= upper:
            return name
    return "Almost Perfect"


def ability_average(const_acc: float, unders_acc: float, unders_rmse: float,
                    reas_acc: float) -> float:
    return (const_acc + unders_acc - unders_rmse + reas_acc) / 3.0


def rescale_rmse_for_plot(rmse_value: float, metric: str) -> float:
    """Percent-like score: 100 at zero error, 0 at the task tolerance, clamped."""
    tolerance = RMSE_PLOT_TOLERANCE[metric]
    return max(0.0, (tolerance - rmse_value) / tolerance * 100.0)


@dataclass
class MetricsReport:
    per_task_accuracy: dict[str, float]
    per_task_rmse: dict[str, float]
    ability_accuracy: dict[str, float]
    unders_rmse: float
    average: float
    counts: dict[str, int]
    unparseable: int
    condition_breakdown: dict[str, dict[str, dict]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "per_task_accuracy": dict(sorted(self.per_task_accuracy.items())),
            "per_task_rmse": dict(sorted(self.per_task_rmse.items())),
            "ability_accuracy": dict(sorted(self.ability_accuracy.items())),
            "unders_rmse": self.unders_rmse,
            "average": self.average,
            "counts": dict(sorted(self.counts.items())),
            "unparseable": self.unparseable,
            "condition_breakdown": self.condition_breakdown,
        }

    def to_text(self) -> str:
        lines = [f"{'task':<28}{'n':>6}{'acc %':>10}{'rmse':>10}"]
        for task in sorted(self.per_task_accuracy):
            acc = self.per_task_accuracy[task]
            lines.append(f"{task:<28}{self.counts.get(task, 0):>6}{acc:>10.2f}{'':>10}")
        for task in sorted(self.per_task_rmse):
            lines.append(
                f"{task:<28}{self.counts.get(task, 0):>6}{'':>10}{self.per_task_rmse[task]:>10.2f}"
            )
        lines.append("")
        for ability in ("Const", "Unders", "Reas"):
            if ability in self.ability_accuracy:
                lines.append(f"{ability + ' acc %':<28}{self.ability_accuracy[ability]:>16.2f}")
        lines.append(f"{'Unders RMSE':<28}{self.unders_rmse:>16.2f}")
        lines.append(f"{'Avg':<28}{self.average:>16.2f}")
        return "\n".join(lines)


def score(items: list[QAItem], preds: list[PredictionRecord],
          metadata_by_scene: dict[str, dict] | None = None,
          min_group: int = 5) -> MetricsReport:
    pairs = _pair(items, preds)

    per_task_acc: dict[str, float] = {}
    per_task_rmse: dict[str, float] = {}
    counts: dict[str, int] = {}
    unparseable = 0
    by_task: dict[str, list] = {}
    for item, pred in pairs:
        by_task.setdefault(item.task_id, []).append((item, pred))
        counts[item.task_id] = counts.get(item.task_id, 0) + 1
        if pred.parsed(item.answer_type) is None:
            unparseable += 1
    for task, task_pairs in by_task.items():
        task_items = [i for i, _ in task_pairs]
        task_preds = [p for _, p in task_pairs]
        if task_items[0].answer_type == "option":
            per_task_acc[task] = exact_match_accuracy(task_items, task_preds)
        else:
            per_task_rmse[task] = rmse(task_items, task_preds).value

    ability_acc: dict[str, float] = {}
    for ability in ("Const", "Unders", "Reas"):
        subset = [
            (i, p) for i, p in pairs if i.ability == ability and i.answer_type == "option"
        ]
        if subset:
            ability_acc[ability] = exact_match_accuracy(
                [i for i, _ in subset], [p for _, p in subset]
            )
    numeric = [(i, p) for i, p in pairs if i.answer_type == "numeric"]
    unders_rmse = rmse([i for i, _ in numeric], [p for _, p in numeric]).value if numeric else 0.0
    average = ability_average(
        ability_acc.get("Const", 0.0),
        ability_acc.get("Unders", 0.0),
        unders_rmse,
        ability_acc.get("Reas", 0.0),
    )

    breakdown: dict[str, dict[str, dict]] = {}
    if metadata_by_scene is not None:
        for axis in ("weather", "time_of_day", "scene_type", "source"):
            groups: dict[str, list] = {}
            for item, pred in pairs:
                if item.answer_type != "option":
                    continue
                meta = metadata_by_scene.get(item.scene_id, {})
                label = meta.get(axis) or "other"
                groups.setdefault(label, []).append((item, pred))
            axis_rows = {}
            for label, group in sorted(groups.items()):
                acc = exact_match_accuracy([i for i, _ in group], [p for _, p in group])
                axis_rows[label] = {
                    "accuracy": acc,
                    "count": len(group),
                    "small_sample": len(group) < min_group,
                }
            breakdown[axis] = axis_rows

    return MetricsReport(
        per_task_accuracy=per_task_acc,
        per_task_rmse=per_task_rmse,
        ability_accuracy=ability_acc,
        unders_rmse=unders_rmse,
        average=average,
        counts=counts,
        unparseable=unparseable,
        condition_breakdown=breakdown,
    )
