"""Aggregation of per-pair metric reports into comparison tables,
significance testing and human-evaluation aggregation.

Tables mark the best value per metric within each method family (best =
maximum everywhere except the human-eval redundancy column, where lower is
better). The report path can also render one bar-chart figure per metric.
"""

import csv
import math
from dataclasses import dataclass
from statistics import mean

from scipy import stats as scipy_stats

from .errors import VeridictError
from .metrics import METRIC_COLUMNS

HUMAN_METRICS = ("informativeness", "redundancy", "factuality", "coherence")


class CoverageError(VeridictError):
    """Methods in one aggregation do not cover the same pair-id set."""


class UnbalancedRatersError(VeridictError):
    """Fleiss kappa needs the same number of raters for every item."""


def default_family(method_id: str) -> str:
    return method_id.split("-", 1)[0]


@dataclass
class ComparisonTable:
    methods: list[str]
    metrics: list[str]
    cells: dict          # (method_id, metric) -> mean value or None
    best: set            # (method_id, metric) marked best in its family
    families: dict       # method_id -> family name
    n_pairs: int


def aggregate(reports, metrics=METRIC_COLUMNS, family_of=None) -> ComparisonTable:
    """Mean per-method metric table with per-family best markers.

    Every method must cover the same pair-id set; otherwise a
    CoverageError names the missing ids.
    """
    if not reports:
        raise ValueError("no reports to aggregate")
    family_of = family_of or default_family
    by_method: dict[str, list] = {}
    for rep in reports:
        by_method.setdefault(rep.method_id, []).append(rep)
    pair_sets = {method: {r.pair_id for r in reps}
                 for method, reps in by_method.items()}
    universe = set().union(*pair_sets.values())
    problems = []
    for method, pairs in sorted(pair_sets.items()):
        missing = sorted(universe - pairs)
        if missing:
            problems.append(f"{method} missing pairs: {', '.join(missing)}")
    if problems:
        raise CoverageError("; ".join(problems))

    methods = sorted(by_method)
    cells = {}
    for method in methods:
        for metric in metrics:
            values = [getattr(r, metric) for r in by_method[method]]
            present = [v for v in values if v is not None]
            cells[(method, metric)] = mean(present) if present else None
    families = {m: family_of(m) for m in methods}
    best = set()
    for family in set(families.values()):
        members = [m for m in methods if families[m] == family]
        for metric in metrics:
            values = [(cells[(m, metric)], m) for m in members
                      if cells[(m, metric)] is not None]
            if not values:
                continue
            top = max(v for v, _ in values)
            best.update((m, metric) for v, m in values if v == top)
    return ComparisonTable(methods=methods, metrics=list(metrics), cells=cells,
                           best=best, families=families,
                           n_pairs=len(universe))


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    significant: bool


def paired_t_test(a, b, alpha: float = 0.05) -> TTestResult:
    """Paired two-sided t-test; 'significant' additionally requires
    mean(a) > mean(b), expressing "significantly higher"."""
    a = list(a)
    b = list(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("need at least two paired observations")
    diffs = [x - y for x, y in zip(a, b)]
    mean_diff = sum(diffs) / n
    var = sum((d - mean_diff) ** 2 for d in diffs) / (n - 1)
    if var == 0.0:
        if mean_diff == 0.0:
            return TTestResult(t=0.0, p=1.0, significant=False)
        t = math.inf if mean_diff > 0 else -math.inf
        return TTestResult(t=t, p=0.0, significant=(0.0 < alpha and mean_diff > 0))
    t = mean_diff / math.sqrt(var / n)
    p = 2.0 * float(scipy_stats.t.sf(abs(t), n - 1))
    return TTestResult(t=t, p=p, significant=(p < alpha and mean_diff > 0))


@dataclass(frozen=True)
class HumanEvalSheet:
    document_id: str
    method_id: str
    annotator_id: str
    informativeness: int
    redundancy: int
    factuality: int
    coherence: int

    def __post_init__(self):
        for name in HUMAN_METRICS:
            score = getattr(self, name)
            if score not in (1, 2, 3, 4, 5):
                raise ValueError(f"{name} score {score!r} outside 1..5")


def human_eval_aggregate(sheets) -> dict:
    """Per-method mean of every human metric over all (document, annotator)
    scores."""
    totals: dict[str, dict[str, list]] = {}
    for sheet in sheets:
        per_method = totals.setdefault(sheet.method_id, {m: [] for m in HUMAN_METRICS})
        for metric in HUMAN_METRICS:
            per_method[metric].append(getattr(sheet, metric))
    return {
        method: {metric: mean(values) for metric, values in metrics_map.items()}
        for method, metrics_map in totals.items()
    }


def fleiss_kappa(sheets, metric: str, categories=(1, 2, 3, 4, 5)) -> float:
    """Fleiss kappa over the item x category count matrix, where an item is
    one (document, method) pair and raters are the annotators."""
    if metric not in HUMAN_METRICS:
        raise ValueError(f"unknown human metric {metric!r}")
    items: dict[tuple, dict] = {}
    for sheet in sheets:
        key = (sheet.document_id, sheet.method_id)
        counts = items.setdefault(key, {c: 0 for c in categories})
        counts[getattr(sheet, metric)] += 1
    if not items:
        raise ValueError("no sheets provided")
    rater_counts = {sum(counts.values()) for counts in items.values()}
    if len(rater_counts) != 1:
        raise UnbalancedRatersError(
            f"items have differing rater counts: {sorted(rater_counts)}")
    r = rater_counts.pop()
    if r < 2:
        raise UnbalancedRatersError("need at least two raters per item")
    n = len(items)
    p_i = []
    category_totals = {c: 0 for c in categories}
    for counts in items.values():
        agree = sum(c * c for c in counts.values()) - r
        p_i.append(agree / (r * (r - 1)))
        for cat, count in counts.items():
            category_totals[cat] += count
    p_bar = sum(p_i) / n
    p_e = sum((total / (n * r)) ** 2 for total in category_totals.values())
    if p_e == 1.0:
        return 1.0 if p_bar == 1.0 else 0.0
    return (p_bar - p_e) / (1.0 - p_e)


def read_human_eval_csv(path) -> list[HumanEvalSheet]:
    """Ingest the long-format sheet CSV: one row per
    (document_id, method_id, annotator_id, metric, score)."""
    rows: dict[tuple, dict] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["document_id"], row["method_id"], row["annotator_id"])
            rows.setdefault(key, {})[row["metric"].strip().lower()] = int(row["score"])
    sheets = []
    for (doc, method, annotator), metrics_map in sorted(rows.items()):
        missing = [m for m in HUMAN_METRICS if m not in metrics_map]
        if missing:
            raise ValueError(
                f"sheet ({doc}, {method}, {annotator}) missing metrics: {missing}")
        sheets.append(HumanEvalSheet(document_id=doc, method_id=method,
                                     annotator_id=annotator, **metrics_map))
    return sheets


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def table_to_csv(table: ComparisonTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "family"] + list(table.metrics))
        for method in table.methods:
            row = [method, table.families[method]]
            for metric in table.metrics:
                value = table.cells[(method, metric)]
                row.append("" if value is None else f"{value:.6f}")
            writer.writerow(row)


def table_to_markdown(table: ComparisonTable) -> str:
    """Aligned markdown; the best value per family per column is starred."""
    header = ["method"] + list(table.metrics)
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    for method in table.methods:
        row = [method]
        for metric in table.metrics:
            value = table.cells[(method, metric)]
            if value is None:
                row.append("")
                continue
            mark = "*" if (method, metric) in table.best else ""
            row.append(f"{value:.3f}{mark}")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def human_eval_table_markdown(means: dict) -> str:
    """Human-eval table; redundancy is best at the minimum."""
    header = ["method"] + list(HUMAN_METRICS)
    lines = ["| " + " | ".join(header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    best = {}
    for metric in HUMAN_METRICS:
        values = [(m[metric]) for m in means.values()]
        if not values:
            continue
        best[metric] = min(values) if metric == "redundancy" else max(values)
    for method in sorted(means):
        row = [method]
        for metric in HUMAN_METRICS:
            value = means[method][metric]
            mark = "*" if value == best.get(metric) else ""
            row.append(f"{value:.2f}{mark}")
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def render_metric_figures(table: ComparisonTable, out_dir) -> list:
    """One bar chart per metric (mean per method), written as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in table.metrics:
        pairs = [(m, table.cells[(m, metric)]) for m in table.methods
                 if table.cells[(m, metric)] is not None]
        if not pairs:
            continue
        names = [p[0] for p in pairs]
        values = [p[1] for p in pairs]
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(names) + 1.5), 3.2))
        ax.bar(range(len(names)), values, color="#4878a8")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel(metric)
        ax.set_title(f"mean {metric} over {table.n_pairs} pairs")
        fig.tight_layout()
        path = out / f"metric_{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written
