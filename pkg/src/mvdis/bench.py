"""Repeated-split benchmark protocol with rank and sign-test aggregation.

For every dataset and repetition one stratified train/test split is drawn;
every method is fit on the same train half and scored on the same test
half (paired design, verifiable through the logged split hashes). Methods
are measure tags driven through the joint pipeline; callables can be
injected for baselines. Aggregation: mean and std accuracy per cell, mean
ranks across datasets (ties averaged), and pairwise sign tests over the
per-dataset mean accuracies with exact binomial critical values.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .config import RunConfig
from .data import DataError, MultiViewDataset, load_multiview, stratified_split, subset
from .dissim import MEASURES
from .pipeline import fit_mvl, predict_mvl_batch

__all__ = [
    "ExperimentReport",
    "SignTestResult",
    "critical_wins",
    "emit_report",
    "mean_ranks",
    "run_experiment",
    "sign_test",
]

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("json", "markdown", "csv")
_ALPHAS = (0.10, 0.05, 0.01)


@dataclass
class ExperimentReport:
    """Raw per-(dataset, method, repetition) accuracies plus run metadata.

    Aggregates (mean/std, mean ranks, sign tests) are derived on demand so
    a JSON round-trip of the raw fields reconstructs an equal report.
    """

    datasets: list
    methods: list
    repeats: int
    train_frac: float
    seed: int
    config: dict
    accuracies: dict  # dataset -> method -> [accuracy per repetition]
    split_hashes: dict  # dataset -> [hash per repetition]
    errors: dict = field(default_factory=dict)  # dataset ref -> message

    _RAW = (
        "datasets",
        "methods",
        "repeats",
        "train_frac",
        "seed",
        "config",
        "accuracies",
        "split_hashes",
        "errors",
    )

    def accuracy_table(self):
        """datasets x methods array of mean accuracies."""
        return np.array(
            [
                [float(np.mean(self.accuracies[d][m])) for m in self.methods]
                for d in self.datasets
            ]
        )

    def aggregates(self):
        out = {}
        for d in self.datasets:
            out[d] = {}
            for m in self.methods:
                accs = np.asarray(self.accuracies[d][m])
                out[d][m] = {"mean": float(accs.mean()), "std": float(accs.std())}
        return out

    def mean_rank_table(self):
        if len(self.methods) < 2 or not self.datasets:
            return {}
        ranks = mean_ranks(self.accuracy_table())
        return {m: float(r) for m, r in zip(self.methods, ranks)}

    def sign_test_pairs(self, alphas=_ALPHAS):
        """Pairwise win/tie/loss tallies over per-dataset mean accuracies."""
        table = self.accuracy_table()
        pairs = []
        for a in range(len(self.methods)):
            for b in range(a + 1, len(self.methods)):
                wins = int(np.sum(table[:, a] > table[:, b]))
                losses = int(np.sum(table[:, a] < table[:, b]))
                ties = len(self.datasets) - wins - losses
                entry = {
                    "method_a": self.methods[a],
                    "method_b": self.methods[b],
                    "wins": wins,
                    "ties": ties,
                    "losses": losses,
                }
                for alpha in alphas:
                    res = sign_test(wins, ties, losses, alpha)
                    entry[f"alpha_{alpha:g}"] = {
                        "significant": res.significant,
                        "critical_wins": res.critical_wins,
                    }
                pairs.append(entry)
        return pairs

    def to_dict(self):
        out = {k: getattr(self, k) for k in self._RAW}
        out["aggregates"] = self.aggregates()
        out["mean_ranks"] = self.mean_rank_table()
        if len(self.methods) >= 2 and self.datasets:
            out["sign_tests"] = self.sign_test_pairs()
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in cls._RAW})


def _split_hash(train_idx, test_idx):
    h = hashlib.sha256()
    h.update(np.asarray(train_idx, dtype=np.int64).tobytes())
    h.update(b"|")
    h.update(np.asarray(test_idx, dtype=np.int64).tobytes())
    return h.hexdigest()


def _measure_method(tag):
    def run(train, test_views, config, seed):
        model = fit_mvl(train, replace(config, measure=tag, seed=seed))
        return predict_mvl_batch(model, test_views)

    return run


def _resolve_methods(methods, extra):
    extra = extra or {}
    resolved = {}
    for m in methods:
        if m in extra:
            resolved[m] = extra[m]
        elif m in MEASURES:
            resolved[m] = _measure_method(m)
        else:
            valid = ", ".join(list(MEASURES) + sorted(extra))
            raise ValueError(f"unknown method {m!r}; valid methods: {valid}")
    return resolved


def run_experiment(manifests, methods, config, extra_methods=None):
    """Run the paired repeated-split protocol.

    manifests entries are manifest paths or in-memory MultiViewDataset
    objects. ``methods`` are measure tags, or names registered in
    ``extra_methods`` (name -> callable(train, test_views, config, seed)
    returning predicted class indices). Load failures are recorded in the
    report's errors map without aborting the other datasets.
    """
    if not manifests:
        raise ValueError("run_experiment needs at least one dataset")
    if not methods:
        raise ValueError("run_experiment needs at least one method")
    config.validate()
    runners = _resolve_methods(methods, extra_methods)

    names = []
    accuracies = {}
    split_hashes = {}
    errors = {}
    for d, entry in enumerate(manifests):
        try:
            ds = entry if isinstance(entry, MultiViewDataset) else load_multiview(entry)
            ds.validate()
        except (DataError, OSError, ValueError) as exc:
            errors[str(entry)] = str(exc)
            logger.error("dataset %s skipped: %s", entry, exc)
            continue
        name = ds.name
        if name in accuracies:
            name = f"{name}#{d}"
        names.append(name)
        accuracies[name] = {m: [] for m in methods}
        split_hashes[name] = []
        logger.info(
            "dataset %s: n=%d, %d views, %d repetitions x %d methods",
            name,
            ds.n_instances,
            ds.n_views,
            config.repeats,
            len(methods),
        )
        for r in range(config.repeats):
            split = stratified_split(
                ds, config.train_frac, np.random.SeedSequence(config.seed, spawn_key=(d, r))
            )
            split_hashes[name].append(_split_hash(split.train, split.test))
            train = subset(ds, split.train)
            test_views = [V[split.test] for V in ds.views]
            y_test = ds.labels[split.test]
            cell_seed = int(
                np.random.SeedSequence(
                    config.seed, spawn_key=(d, r, 1)
                ).generate_state(1)[0]
            )
            for m in methods:
                pred = np.asarray(runners[m](train, test_views, config, cell_seed))
                accuracies[name][m].append(float(np.mean(pred == y_test)))

    return ExperimentReport(
        datasets=names,
        methods=list(methods),
        repeats=config.repeats,
        train_frac=config.train_frac,
        seed=config.seed,
        config=dict(config.to_dict(), prediction="majority-vote"),
        accuracies=accuracies,
        split_hashes=split_hashes,
        errors=errors,
    )


def mean_ranks(acc_table):
    """Mean rank per method over datasets; rank 1 = highest accuracy,
    ties get averaged ranks."""
    acc = np.asarray(acc_table, dtype=np.float64)
    if acc.ndim != 2 or acc.shape[1] < 2:
        raise ValueError("acc_table must be 2-d with at least two methods")
    ranks = np.vstack([rankdata(-row, method="average") for row in acc])
    return ranks.mean(axis=0)


def critical_wins(n, alpha):
    """Least w such that the exact binomial(n, 1/2) upper tail
    sum_{j>=w} C(n,j)/2^n is <= alpha. Returns n+1 when no win count
    reaches significance (tiny n)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    bound = Fraction(alpha)
    total = 2**n
    acc = 0
    for w in range(n, -1, -1):
        acc += comb(n, w)
        if Fraction(acc, total) > bound:
            return w + 1
    return 0


@dataclass
class SignTestResult:
    significant: bool
    critical_wins: int
    n: int
    wins_adjusted: int
    losses_adjusted: int
    alpha: float


def sign_test(wins, ties, losses, alpha):
    """Sign test on wins vs losses, ties split evenly with the odd tie
    rounded toward losses. ``significant`` reports whether the adjusted
    win count reaches the critical value for N = wins + ties + losses."""
    if min(wins, ties, losses) < 0:
        raise ValueError("wins, ties and losses must be nonnegative")
    n = wins + ties + losses
    if n < 1:
        raise ValueError("need at least one comparison")
    w_adj = wins + ties // 2
    l_adj = losses + (ties - ties // 2)
    crit = critical_wins(n, alpha)
    return SignTestResult(
        significant=w_adj >= crit,
        critical_wins=crit,
        n=n,
        wins_adjusted=w_adj,
        losses_adjusted=l_adj,
        alpha=alpha,
    )


def _markdown_report(report):
    lines = ["# Benchmark report", ""]
    cfg = report.config
    lines.append(
        f"seed {report.seed}, {report.repeats} repetitions, "
        f"train fraction {report.train_frac}, {cfg.get('p_trees', '?')} trees"
    )
    lines.append("")
    lines.append("| Dataset | " + " | ".join(report.methods) + " |")
    lines.append("| --- |" + " ---: |" * len(report.methods))
    agg = report.aggregates()
    for d in report.datasets:
        cells = []
        means = [agg[d][m]["mean"] for m in report.methods]
        best = max(means)
        for m, mean in zip(report.methods, means):
            text = f"{100 * mean:.2f} ± {100 * agg[d][m]['std']:.2f}"
            cells.append(f"**{text}**" if mean == best else text)
        lines.append(f"| {d} | " + " | ".join(cells) + " |")
    if report.datasets:
        if len(report.methods) >= 2:
            ranks = mean_ranks(report.accuracy_table())
        else:
            ranks = np.array([1.0])
        best = ranks.min()
        cells = [
            f"**{r:.2f}**" if r == best else f"{r:.2f}" for r in ranks
        ]
        lines.append("| *Avg rank* | " + " | ".join(cells) + " |")
    if report.errors:
        lines.append("")
        lines.append("## Load errors")
        lines.append("")
        for ref in sorted(report.errors):
            lines.append(f"- `{ref}`: {report.errors[ref]}")
    return "\n".join(lines) + "\n"


def _csv_report(report):
    lines = ["dataset,method,repetition,accuracy"]
    for d in report.datasets:
        for m in report.methods:
            for r, acc in enumerate(report.accuracies[d][m]):
                lines.append(f"{d},{m},{r},{repr(acc)}")
    return "\n".join(lines) + "\n"


def emit_report(report, path, fmt):
    """Write the report; json is lossless, markdown mirrors the accuracy
    grid with bold best cells and an average-rank footer, csv is one row
    per (dataset, method, repetition)."""
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose one of {REPORT_FORMATS}")
    if not report.methods:
        raise ValueError("report has no methods")
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    elif fmt == "markdown":
        text = _markdown_report(report)
    else:
        text = _csv_report(report)
    path = Path(path)
    path.write_text(text)
    return path
