"""Aggregation and statistics over evaluation records and metric vectors.

Score tables average judge scores per (model, task, domain); leaderboards
rank models on the overall mean (shown both as the 1-10 mean and as a x10
percentage view, labeled); task correlation is Pearson's r over per-model
(judgment, steering) averages; model-human differences are Cohen's d with
the classic pooled standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .principles import EvaluationRecord
from .textmetrics import METRIC_NAMES, MetricVector
from .threads import round2

TASKS = ("judgment", "steering")
DOMAIN_ORDER = ("Games", "Lifestyle", "Religions", "SocialJustice", "Sports", "Technologies", "Other")


@dataclass(frozen=True)
class ScoreTable:
    models: tuple[str, ...]
    domains: tuple[str, ...]
    cells: dict[tuple[str, str, str], float]  # (model, task, domain) -> mean
    overall: dict[str, float]  # model -> mean of its defined cells
    incomplete: dict[str, bool]  # model -> some cells missing

    def cell(self, model: str, task: str, domain: str) -> float | None:
        return self.cells.get((model, task, domain))


@dataclass(frozen=True)
class EffectSizeRow:
    metric: str
    mean_model: float
    mean_human: float
    pooled_sd: float
    cohen_d: float
    n_model: int
    n_human: int
    infinite: bool = False


@dataclass(frozen=True)
class EffectSizeReport:
    rows: tuple[EffectSizeRow, ...]

    def row(self, metric: str) -> EffectSizeRow | None:
        for r in self.rows:
            if r.metric == metric:
                return r
        return None


def build_score_table(records: list[EvaluationRecord]) -> ScoreTable:
    """Mean judge score per (model, task, domain) cell plus per-model overall.

    The overall column is the plain mean of that model's defined cells;
    models with any missing cell are flagged so reports can footnote them.
    Cell means use exact summation, so record order cannot shift them.
    """
    values: dict[tuple[str, str, str], list[float]] = {}
    domains_present: set[str] = set()
    models_present: set[str] = set()
    for r in records:
        key = (r.evaluated_model, r.task, r.domain_tag)
        values.setdefault(key, []).append(r.score)
        domains_present.add(r.domain_tag)
        models_present.add(r.evaluated_model)

    domains = tuple(d for d in DOMAIN_ORDER if d in domains_present)
    models = tuple(sorted(models_present))
    cells = {key: math.fsum(vals) / len(vals) for key, vals in values.items()}

    overall: dict[str, float] = {}
    incomplete: dict[str, bool] = {}
    for model in models:
        values = []
        missing = False
        for task in TASKS:
            for domain in domains:
                v = cells.get((model, task, domain))
                if v is None:
                    missing = True
                else:
                    values.append(v)
        overall[model] = sum(values) / len(values) if values else float("nan")
        incomplete[model] = missing
    return ScoreTable(
        models=models, domains=domains, cells=cells, overall=overall, incomplete=incomplete
    )


def score_table_csv(table: ScoreTable) -> str:
    header = ["model"]
    for task in TASKS:
        for domain in table.domains:
            header.append(f"{task}_{domain}")
    header.append("overall")
    header.append("incomplete")
    lines = [",".join(header)]
    for model in table.models:
        row = [model]
        for task in TASKS:
            for domain in table.domains:
                v = table.cell(model, task, domain)
                row.append("" if v is None else f"{round2(v):.2f}")
        row.append(f"{round2(table.overall[model]):.2f}")
        row.append("yes" if table.incomplete[model] else "no")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def leaderboard_rows(table: ScoreTable) -> list[tuple[str, float, float]]:
    """(model, overall mean on the 1-10 scale, x10 percentage view), best first."""
    rows = [(m, table.overall[m], table.overall[m] * 10.0) for m in table.models]
    rows.sort(key=lambda r: (-r[1], r[0]))
    return rows


def leaderboard_csv(table: ScoreTable) -> str:
    lines = ["rank,model,mean_score_1_10,percent_view"]
    for rank, (model, mean10, pct) in enumerate(leaderboard_rows(table), start=1):
        lines.append(f"{rank},{model},{round2(mean10):.2f},{round2(pct):.2f}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TaskCorrelation:
    r: float | None
    points: tuple[tuple[str, float, float], ...]  # (model, judgment avg, steering avg)
    reason: str | None = None


def _task_average(table: ScoreTable, model: str, task: str) -> float | None:
    values = [
        table.cells[(model, task, d)] for d in table.domains if (model, task, d) in table.cells
    ]
    return sum(values) / len(values) if values else None


def pearson_r(xs: list[float], ys: list[float]) -> float | None:
    n = len(xs)
    if n < 2:
        return None
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    return sxy / math.sqrt(sxx * syy)


def correlate_tasks(table: ScoreTable) -> TaskCorrelation:
    """Pearson r between per-model judgment and steering averages."""
    points = []
    for model in table.models:
        j = _task_average(table, model, "judgment")
        s = _task_average(table, model, "steering")
        if j is not None and s is not None:
            points.append((model, j, s))
    if len(points) < 3:
        return TaskCorrelation(
            r=None, points=tuple(points), reason=f"only {len(points)} models with both task averages"
        )
    r = pearson_r([p[1] for p in points], [p[2] for p in points])
    return TaskCorrelation(r=r, points=tuple(points))


def correlation_csv(corr: TaskCorrelation) -> str:
    lines = ["model,judgment_avg,steering_avg"]
    for model, j, s in corr.points:
        lines.append(f"{model},{j!r},{s!r}")
    return "\n".join(lines) + "\n"


def _mean(xs: list[float]) -> float:
    return sum(xs) / len(xs)


def _pop_var(xs: list[float]) -> float:
    m = _mean(xs)
    return sum((x - m) ** 2 for x in xs) / len(xs)


def cohen_d(model_samples: list[float], human_samples: list[float]) -> tuple[float, float, bool]:
    """(d, pooled_sd, infinite_flag) for two sample groups.

    pooled_sd = sqrt(((n_m-1)s_m^2 + (n_h-1)s_h^2) / (n_m+n_h-2)) with the
    group variances taken over each group as given (ddof=0), so the
    constructed pair {0,2} vs {-1,1} lands exactly on d = 1. Zero pooled
    spread with equal means gives d = 0; with unequal means the effect is
    flagged infinite (signed) rather than fabricated.
    """
    n_m, n_h = len(model_samples), len(human_samples)
    if n_m < 2 or n_h < 2:
        raise ValueError("each group needs at least 2 samples")
    mean_m, mean_h = _mean(model_samples), _mean(human_samples)
    pooled_var = ((n_m - 1) * _pop_var(model_samples) + (n_h - 1) * _pop_var(human_samples)) / (
        n_m + n_h - 2
    )
    pooled_sd = math.sqrt(pooled_var)
    diff = mean_m - mean_h
    if pooled_sd == 0.0:
        if diff == 0.0:
            return 0.0, 0.0, False
        return math.copysign(math.inf, diff), 0.0, True
    return diff / pooled_sd, pooled_sd, False


def effect_sizes(
    model_metrics: list[MetricVector], human_metrics: list[MetricVector]
) -> EffectSizeReport:
    """Per-metric Cohen's d between model and human metric vectors.

    Undefined values are excluded pairwise: each metric uses only the
    vectors where it is defined, and needs at least two samples per group.
    """
    rows = []
    for name in METRIC_NAMES:
        m_vals = [getattr(v, name) for v in model_metrics if getattr(v, name) is not None]
        h_vals = [getattr(v, name) for v in human_metrics if getattr(v, name) is not None]
        if len(m_vals) < 2 or len(h_vals) < 2:
            continue
        m_vals = [float(v) for v in m_vals]
        h_vals = [float(v) for v in h_vals]
        d, pooled, infinite = cohen_d(m_vals, h_vals)
        rows.append(
            EffectSizeRow(
                metric=name,
                mean_model=_mean(m_vals),
                mean_human=_mean(h_vals),
                pooled_sd=pooled,
                cohen_d=d,
                n_model=len(m_vals),
                n_human=len(h_vals),
                infinite=infinite,
            )
        )
    return EffectSizeReport(rows=tuple(rows))


def effects_csv(report: EffectSizeReport) -> str:
    lines = ["metric,mean_model,mean_human,pooled_sd,cohen_d,n_model,n_human,infinite"]
    for r in report.rows:
        d = "inf" if r.infinite and r.cohen_d > 0 else "-inf" if r.infinite else repr(r.cohen_d)
        lines.append(
            f"{r.metric},{r.mean_model!r},{r.mean_human!r},{r.pooled_sd!r},{d},"
            f"{r.n_model},{r.n_human},{'yes' if r.infinite else 'no'}"
        )
    return "\n".join(lines) + "\n"


def distributions_csv(
    groups: dict[str, list[MetricVector]]
) -> str:
    """Long-format plot data: one (group, metric, value) row per defined value."""
    lines = ["group,metric,value"]
    for group in sorted(groups):
        for vector in groups[group]:
            for name in METRIC_NAMES:
                value = getattr(vector, name)
                if value is not None:
                    lines.append(f"{group},{name},{value!r}")
    return "\n".join(lines) + "\n"
