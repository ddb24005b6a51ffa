"""Aggregation of per-run AUC records into category tables.

A report table has one row per method variant, one column per category
plus a trailing Average column (mean over categories), rendered in
percent with one decimal, matching the layout used for multi-run AUC
summaries.
"""

from dataclasses import dataclass, field

from ..errors import SchemaViolationError


@dataclass(frozen=True)
class RunResult:
    """Per-category AUC values of one run at one shot count."""

    seed: int
    shots: int
    image_auc: dict      # category -> float in [0, 1]
    pixel_auc: dict = field(default_factory=dict)

    def validate(self):
        for table in (self.image_auc, self.pixel_auc):
            for cat, value in table.items():
                if not 0.0 <= value <= 1.0:
                    raise SchemaViolationError(
                        f"AUC out of range for {cat!r}: {value}"
                    )
        return self


def aggregate(results, metric="image_auc"):
    """Average the per-category values of many runs.

    Returns (categories, per-category means, overall average), all on the
    [0, 1] scale.  Every run must cover the same category set.
    """
    if not results:
        raise SchemaViolationError("no results to aggregate")
    tables = [getattr(r.validate(), metric) for r in results]
    categories = sorted(tables[0])
    for t in tables[1:]:
        if sorted(t) != categories:
            raise SchemaViolationError(
                f"mismatched category sets: {categories} vs {sorted(t)}"
            )
    means = {
        cat: sum(t[cat] for t in tables) / len(tables) for cat in categories
    }
    average = sum(means.values()) / len(categories)
    return categories, means, average


def render_percent(value):
    return f"{value * 100:.1f}"


def render_table_csv(rows, categories):
    """rows: list of (label, means dict, average)."""
    lines = ["method," + ",".join(categories) + ",Average"]
    for label, means, average in rows:
        cells = [render_percent(means[c]) for c in categories]
        lines.append(f"{label}," + ",".join(cells) + f",{render_percent(average)}")
    return "\n".join(lines) + "\n"


def render_table_markdown(rows, categories, title=""):
    header = "| method | " + " | ".join(categories) + " | Average |"
    rule = "|" + "---|" * (len(categories) + 2)
    lines = [f"### {title}", "", header, rule] if title else [header, rule]
    for label, means, average in rows:
        cells = " | ".join(render_percent(means[c]) for c in categories)
        lines.append(f"| {label} | {cells} | {render_percent(average)} |")
    return "\n".join(lines) + "\n"
