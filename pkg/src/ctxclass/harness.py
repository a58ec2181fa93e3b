"""Experiment orchestration: strategy grids, accuracy accounting, reports.

The strategy grid is the 2^3 cube of (contextual normalization, contextual
expansion, contextual weighting).  Percentages are reported as half-up
rounded integers, with exact correct counts kept alongside.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

import scipy.stats

from .classify import (
    SelectionParams,
    mlr_fit,
    mlr_predict_dataset,
    nn_fit,
    nn_predict_dataset,
)
from .data import MISSING, Dataset, split_random
from .preprocess import ContextKey, PipelineConfig, equal_freq_bins, run_pipeline

CLASSIFIERS = ("nn", "mlr")

#: grid in table order: (normalization, expansion, weighting), No-rows first
STRATEGY_COMBOS = (
    (False, False, False),
    (False, False, True),
    (False, True, False),
    (False, True, True),
    (True, False, False),
    (True, False, True),
    (True, True, False),
    (True, True, True),
)


def percent(correct: int, total: int) -> int:
    """Half-up integer percentage."""
    return int(math.floor(100.0 * correct / total + 0.5))


@dataclass(frozen=True)
class CellResult:
    combo: tuple  # strategy flags, or (classifier, normalizer) labels
    correct: int
    total: int

    def __post_init__(self):
        if not 0 <= self.correct <= self.total:
            raise ValueError("correct count out of range")

    @property
    def percent(self) -> int:
        return percent(self.correct, self.total)


@dataclass(frozen=True)
class TTestResult:
    combo: tuple
    t: float | None
    p: float | None
    no_variance: bool = False


@dataclass(frozen=True)
class ExperimentReport:
    dataset_id: str
    classifier_id: str
    cells: tuple[CellResult, ...]
    per_split: tuple = ()  # (split index, combo, correct, total) records
    significance: tuple[TTestResult, ...] = ()

    def cell(self, combo: tuple) -> CellResult:
        for c in self.cells:
            if c.combo == combo:
                return c
        raise KeyError(f"no cell for combo {combo!r}")


def evaluate(classifier: str, train: Dataset, test: Dataset) -> int:
    """Fit on train, count correct predictions on test."""
    if classifier == "nn":
        model = nn_fit(train)
        preds = nn_predict_dataset(model, test)
    elif classifier == "mlr":
        model = mlr_fit(train, SelectionParams(enabled=True))
        preds = mlr_predict_dataset(model, test)
    else:
        raise ValueError(f"unknown classifier {classifier!r}")
    truth = test.class_labels()
    return sum(1 for p, t in zip(preds, truth) if p == t)


def _combo_config(
    combo: tuple[bool, bool, bool],
    context: ContextKey,
    expand_feature: str | None,
    contextual_fit: str,
    impute: bool,
) -> PipelineConfig:
    normalize, expand, weight = combo
    return PipelineConfig(
        normalize="contextual" if normalize else "off",
        expand=(expand_feature,) if expand and expand_feature else (),
        weight=weight,
        context=context,
        contextual_fit=contextual_fit,
        impute=impute,
    )


def run_strategy_grid(
    train: Dataset,
    test: Dataset,
    classifier: str,
    context: ContextKey,
    expand_feature: str | None,
    contextual_fit: str = "train",
    impute: bool = False,
) -> tuple[CellResult, ...]:
    cells = []
    for combo in STRATEGY_COMBOS:
        config = _combo_config(combo, context, expand_feature, contextual_fit, impute)
        tr, te = run_pipeline(config, train, test)
        correct = evaluate(classifier, tr, te)
        cells.append(CellResult(combo, correct, test.n_rows))
    return tuple(cells)


def run_vowel_grid(train: Dataset, test: Dataset, classifier: str) -> ExperimentReport:
    """The 8-combo grid on the vowel pair: speaker is the context, sex is the
    expansion feature, and contextual normalization is transductive (each
    speaker's statistics come from that speaker's own rows)."""
    cells = run_strategy_grid(
        train,
        test,
        classifier,
        context=ContextKey("speaker"),
        expand_feature="sex",
        contextual_fit="transductive",
    )
    return ExperimentReport("vowel", classifier, cells)


def run_hepatitis_grid(
    dataset: Dataset,
    n_splits: int = 10,
    seed: int = 0,
    classifier: str = "nn",
    n_train: int = 100,
    age_bins: int = 5,
) -> ExperimentReport:
    """Aggregate the 8-combo grid over seeded random train/test splits.

    Per split: impute from the training rows, bin the age context into
    equal-frequency intervals computed on the training rows, then run all
    combos.  Counts are summed over splits; the patient's sex stays unused.
    """
    rng = random.Random(seed)
    split_seeds = [rng.randrange(2**32) for _ in range(n_splits)]
    totals = {combo: 0 for combo in STRATEGY_COMBOS}
    grand_total = {combo: 0 for combo in STRATEGY_COMBOS}
    per_split = []
    per_split_acc = {combo: [] for combo in STRATEGY_COMBOS}
    age_idx = dataset.schema.index_of("age")
    for s, split_seed in enumerate(split_seeds):
        train, test = split_random(dataset, n_train, split_seed)
        ages = [float(c) for c in train.column(age_idx) if c is not MISSING]
        boundaries = equal_freq_bins(ages, age_bins)
        context = ContextKey("age", boundaries)
        for combo in STRATEGY_COMBOS:
            config = _combo_config(combo, context, "age", "train", impute=True)
            tr, te = run_pipeline(config, train, test)
            correct = evaluate(classifier, tr, te)
            totals[combo] += correct
            grand_total[combo] += test.n_rows
            per_split.append((s, combo, correct, test.n_rows))
            per_split_acc[combo].append(correct / test.n_rows)
    cells = tuple(
        CellResult(combo, totals[combo], grand_total[combo]) for combo in STRATEGY_COMBOS
    )
    baseline = per_split_acc[STRATEGY_COMBOS[0]]
    significance = tuple(
        paired_t_test(per_split_acc[combo], baseline, combo=combo)
        for combo in STRATEGY_COMBOS[1:]
    )
    return ExperimentReport(
        "hepatitis", classifier, cells, per_split=tuple(per_split), significance=significance
    )


NORMALIZER_MENU = (
    "none",
    "minmax",
    "zscore",
    "percentile",
    "baseline",
    "contextual-nn",
    "contextual-linear",
)


def run_normalization_comparison(
    train: Dataset,
    test: Dataset,
    classifiers: Sequence[str] = CLASSIFIERS,
    normalizers: Sequence[str] = NORMALIZER_MENU,
    baseline: Dataset | None = None,
    context_feature: str | None = None,
) -> ExperimentReport:
    """One cell per (classifier, normalizer) on a labeled pair with context.

    ``baseline`` is the reference set for the baseline z-score and the two
    model-based contextual normalizers (regression of each feature on the
    continuous context feature)."""
    if context_feature is None:
        ctx_idx = train.schema.contextual_indices
        if not ctx_idx:
            raise ValueError("dataset has no contextual features")
        context_feature = train.schema.features[ctx_idx[0]].name
    cells = []
    for classifier in classifiers:
        for norm in normalizers:
            if norm == "none":
                config = PipelineConfig(normalize="off")
            elif norm in ("minmax", "zscore", "percentile"):
                config = PipelineConfig(normalize=norm)
            elif norm == "baseline":
                if baseline is None:
                    raise ValueError("baseline normalizer requires a baseline set")
                config = PipelineConfig(normalize="baseline", baseline=baseline)
            elif norm in ("contextual-nn", "contextual-linear"):
                if baseline is None:
                    raise ValueError(f"{norm} requires a baseline set")
                config = PipelineConfig(
                    normalize="contextual",
                    context=ContextKey(context_feature),
                    contextual_model=norm.split("-")[1],
                    baseline=baseline,
                )
            else:
                raise ValueError(f"unknown normalizer {norm!r}")
            tr, te = run_pipeline(config, train, test)
            correct = evaluate(classifier, tr, te)
            cells.append(CellResult((classifier, norm), correct, test.n_rows))
    return ExperimentReport("normalization-comparison", "+".join(classifiers), tuple(cells))


def synergy(report: ExperimentReport) -> tuple[int, int]:
    """(sum of single-strategy gains, joint gain) in rounded percentage points."""
    base = report.cell((False, False, False)).percent
    singles = [
        report.cell(c).percent - base
        for c in ((True, False, False), (False, True, False), (False, False, True))
    ]
    joint = report.cell((True, True, True)).percent - base
    return sum(singles), joint


def paired_t_test(
    acc_a: Sequence[float], acc_b: Sequence[float], combo: tuple = ()
) -> TTestResult:
    """Two-sided paired Student t on per-split accuracy differences."""
    if len(acc_a) != len(acc_b):
        raise ValueError("sequences must have equal length")
    if len(acc_a) < 2:
        raise ValueError("need at least 2 paired observations")
    diffs = [a - b for a, b in zip(acc_a, acc_b)]
    n = len(diffs)
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    # accuracy differences are quotients of small integers; deviations at
    # rounding scale mean the differences are constant for our purposes
    if sd <= 1e-12 * max(1.0, abs(mean)):
        if abs(mean) <= 1e-12:
            return TTestResult(combo, 0.0, 1.0)
        return TTestResult(combo, None, None, no_variance=True)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(scipy.stats.t.sf(abs(t), n - 1))
    return TTestResult(combo, t, p)


# ---------------------------------------------------------------------------
# Report emission

def _combo_words(combo: tuple) -> tuple[str, ...]:
    if all(isinstance(x, bool) for x in combo):
        return tuple("Yes" if x else "No" for x in combo)
    return tuple(str(x) for x in combo)


def _columns(report: ExperimentReport) -> tuple[str, ...]:
    first = report.cells[0].combo if report.cells else (False, False, False)
    if all(isinstance(x, bool) for x in first):
        return ("normalize", "expand", "weight")
    return ("classifier", "normalizer")


def emit_table(report: ExperimentReport, format: str = "text") -> str:
    """Render a report; 'text' for eyes, 'csv' for machines.  Output is
    byte-stable for a fixed report."""
    key_cols = _columns(report)
    header = key_cols + ("correct", "total", "percent")
    rows = [
        _combo_words(c.combo) + (str(c.correct), str(c.total), str(c.percent))
        for c in report.cells
    ]
    if format == "csv":
        return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    widths = [
        max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i])
        for i in range(len(header))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def report_schema_json(report: ExperimentReport) -> str:
    """Sidecar schema so the CSV emission round-trips through load_table."""
    import json

    key_cols = _columns(report)
    entries = []
    for i, name in enumerate(key_cols):
        values = sorted({_combo_words(c.combo)[i] for c in report.cells}) or ["No", "Yes"]
        role = "contextual" if i else "class"
        entries.append({"name": name, "role": role, "kind": "discrete", "alphabet": values})
    for name in ("correct", "total", "percent"):
        entries.append({"name": name, "role": "primary", "kind": "continuous"})
    return json.dumps(entries, indent=2)


def write_report(report: ExperimentReport, base_path) -> tuple[str, str]:
    """Write <base>.txt and <base>.csv (plus <base>.schema.json); returns paths."""
    from pathlib import Path

    base = Path(base_path)
    txt = base.with_suffix(".txt")
    csvp = base.with_suffix(".csv")
    txt.write_text(emit_table(report, "text"))
    body = emit_table(report, "csv")
    # the data file proper has no header row; load_table expects raw cells
    csvp.write_text("\n".join(body.splitlines()[1:]) + "\n")
    base.with_suffix(".schema.json").write_text(report_schema_json(report) + "\n")
    return str(txt), str(csvp)
