"""Metrics, strength-interval breakdowns, label-noise robustness and
grid sensitivity analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .errors import DataError
from .network import ConstraintSpec, TrainConfig, predict_specimens, train, variant_spec
from .seeding import child_rng


@dataclass(frozen=True)
class MetricsReport:
    rmse: float          # kN
    mape: float          # percent
    r2: float
    cov: float           # CoV of target/predicted ratios
    n: int
    within_10pct: float  # percent of rows with |err|/target < 10%
    within_20pct: float


def compute_metrics(targets, preds, paper_literal_mape: bool = False) -> MetricsReport:
    """Standard regression metrics on capacities in kN.

    CoV is the coefficient of variation of the test-to-predicted ratio.
    paper_literal_mape puts the predicted value in the MAPE denominator.
    """
    t = np.asarray(targets, dtype=float)
    a = np.asarray(preds, dtype=float)
    if t.shape != a.shape or t.size == 0:
        raise DataError("targets/preds must be nonempty and equal length")
    if np.any(t <= 0):
        raise DataError("targets must be positive")
    err = t - a
    rmse = float(np.sqrt(np.mean(err**2)))
    denom = a if paper_literal_mape else t
    if paper_literal_mape and np.any(denom == 0):
        raise DataError("zero predicted value with literal MAPE denominator")
    mape = float(np.mean(np.abs(err / denom)) * 100.0)
    sstot = float(np.sum((t - t.mean()) ** 2))
    ssres = float(np.sum(err**2))
    r2 = 1.0 - ssres / sstot if sstot > 0 else (1.0 if ssres == 0 else -math.inf)
    ratio = t / a
    cov = float(ratio.std() / ratio.mean()) if ratio.mean() != 0 else math.inf
    rel = np.abs(err) / t
    return MetricsReport(rmse=rmse, mape=mape, r2=r2, cov=cov, n=t.size,
                         within_10pct=float(np.mean(rel < 0.10) * 100.0),
                         within_20pct=float(np.mean(rel < 0.20) * 100.0))


@dataclass(frozen=True)
class ClassBounds:
    """Strength class boundaries, MPa."""

    concrete: tuple[float, float] = (50.0, 100.0)   # NSC < 50 <= HSC < 100 <= UHSC
    steel: tuple[float, float] = (460.0, 700.0)     # NSS < 460 <= HSS < 700 <= UHSS


CONCRETE_CLASSES = ("NSC", "HSC", "UHSC")
STEEL_CLASSES = ("NSS", "HSS", "UHSS")


def _classify(value: float, cuts: tuple[float, float]) -> int:
    if value < cuts[0]:
        return 0
    if value < cuts[1]:
        return 1
    return 2


@dataclass
class StrengthCell:
    steel_class: str
    concrete_class: str
    metrics: MetricsReport | None  # None when the cell is empty
    n: int


@dataclass
class IntervalBreakdown:
    cells: list[StrengthCell]
    steel_marginals: dict[str, MetricsReport | None]
    concrete_marginals: dict[str, MetricsReport | None]
    total: MetricsReport


def interval_breakdown(specimens, preds,
                       bounds: ClassBounds | None = None) -> IntervalBreakdown:
    """3x3 metric grid over (steel class, concrete class) plus marginals."""
    if not specimens:
        raise DataError("no specimens")
    bounds = bounds or ClassBounds()
    preds = np.asarray(preds, dtype=float)
    targets = np.array([s.N for s in specimens])
    si = np.array([_classify(s.fy, bounds.steel) for s in specimens])
    ci = np.array([_classify(s.fc, bounds.concrete) for s in specimens])

    def maybe_metrics(mask):
        if not mask.any():
            return None
        return compute_metrics(targets[mask], preds[mask])

    cells = []
    for i, sc in enumerate(STEEL_CLASSES):
        for j, cc in enumerate(CONCRETE_CLASSES):
            mask = (si == i) & (ci == j)
            cells.append(StrengthCell(sc, cc, maybe_metrics(mask), int(mask.sum())))
    steel_marg = {sc: maybe_metrics(si == i) for i, sc in enumerate(STEEL_CLASSES)}
    conc_marg = {cc: maybe_metrics(ci == j) for j, cc in enumerate(CONCRETE_CLASSES)}
    return IntervalBreakdown(cells=cells, steel_marginals=steel_marg,
                             concrete_marginals=conc_marg,
                             total=compute_metrics(targets, preds))


def perturb_labels(labels, p: float, d: float, seed: int = 0) -> np.ndarray:
    """Multiplicative uniform label noise on a random p-fraction of rows.

    Each label independently: with probability p, y' = y * (1 + delta)
    with delta ~ U(-d, d); otherwise unchanged.
    """
    if not 0 <= p <= 1:
        raise ValueError("p must be in [0, 1]")
    if d < 0:
        raise ValueError("d must be >= 0")
    y = np.array(labels, dtype=float)
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=len(y))
    delta = rng.uniform(-d, d, size=len(y))
    hit = u <= p
    y[hit] *= 1.0 + delta[hit]
    return y


@dataclass
class RobustnessCell:
    variant: str
    level: float
    mape: float | None
    error: str = ""


def robustness_sweep(dataset: Dataset, variants=("ANN", "ANNWT"),
                     sweep: str = "vary_p", levels=None,
                     fixed_d: float = 0.20, fixed_p: float = 0.30,
                     base_spec: ConstraintSpec | None = None,
                     config: TrainConfig | None = None,
                     feature_order=None, seed: int = 0) -> list[RobustnessCell]:
    """Train each variant on noise-perturbed training labels, evaluate on
    the clean validation split; one MAPE cell per (variant, level)."""
    from .features import PAPER_SELECTED

    if sweep not in ("vary_p", "vary_d"):
        raise ValueError("sweep must be 'vary_p' or 'vary_d'")
    if levels is None:
        levels = [0.1, 0.2, 0.3, 0.4, 0.5] if sweep == "vary_p" \
            else [0.05, 0.10, 0.15, 0.20, 0.25, 0.30]
    config = config or TrainConfig()
    feature_order = feature_order or PAPER_SELECTED
    from .data import split as split_dataset

    tr, va = split_dataset(dataset, dataset.split_fraction, dataset.split_seed)
    specimens = dataset.specimens
    cells = []
    for level_i, level in enumerate(levels):
        p, d = (level, fixed_d) if sweep == "vary_p" else (fixed_p, level)
        noise_seed = int(child_rng(seed, level_i).integers(2**31))
        labels = np.array([s.N for s in specimens])
        perturbed = labels.copy()
        perturbed[tr] = perturb_labels(labels[tr], p, d, seed=noise_seed)
        noisy = Dataset(specimens=tuple(
            replace(s, N=float(perturbed[i])) for i, s in enumerate(specimens)),
            split_seed=dataset.split_seed, split_fraction=dataset.split_fraction)
        for variant in variants:
            spec = variant_spec(variant, base_spec)
            try:
                params, _ = train(noisy, feature_order, spec, config)
                preds = predict_specimens(params, [specimens[i] for i in va])
                m = compute_metrics(labels[va], preds)
                cells.append(RobustnessCell(variant, level, m.mape))
            except Exception as exc:  # annotate, never fabricate
                cells.append(RobustnessCell(variant, level, None, error=str(exc)))
    return cells


def sensitivity(predict_fn, X, grid_points: int = 21) -> np.ndarray:
    """Per-feature output range on a grid sweep, normalized to 100 percent.

    Each feature is swept over its observed [min, max] on grid_points
    while the others sit at their means; a constant feature contributes 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise DataError("empty frame")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    m = X.shape[1]
    means = X.mean(axis=0)
    ranges = np.zeros(m)
    for i in range(m):
        lo, hi = X[:, i].min(), X[:, i].max()
        if hi == lo:
            continue
        grid = np.linspace(lo, hi, grid_points)
        rows = np.tile(means, (grid_points, 1))
        rows[:, i] = grid
        preds = np.asarray(predict_fn(rows), dtype=float)
        ranges[i] = preds.max() - preds.min()
    total = ranges.sum()
    if total == 0:
        return np.zeros(m)
    return ranges / total * 100.0
