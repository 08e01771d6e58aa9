"""Engineered features for circular CFST specimens, correlations and selection.

Force-like features (Nu0, Ns, Nc) are stored in kN to match the label;
areas in mm^2, volumes in mm^3, everything else dimensionless.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Specimen
from .errors import DataError

RAW_NAMES = ["D", "t", "L", "fy", "fc"]
ENGINEERED_NAMES = ["As", "Ac", "Asc", "C", "D_over_t", "Vs", "Vc",
                    "xi", "Nu0", "Ns", "Nc", "SEF", "alpha_sc", "lambda"]
FEATURE_VOCAB = RAW_NAMES + ENGINEERED_NAMES

# Published ten-feature input set.
PAPER_SELECTED = ["Nu0", "As", "Vc", "Vs", "D", "Ac", "Asc", "C", "Ns", "fc"]

LABEL_NAME = "N"


def engineer(s: Specimen) -> dict[str, float]:
    """All fourteen engineered quantities for one specimen."""
    inner = s.D - 2 * s.t
    As = math.pi * (s.D * s.D - inner * inner) / 4.0
    Ac = math.pi * inner * inner / 4.0
    Ns = As * s.fy / 1e3
    Nc = Ac * s.fc / 1e3
    return {
        "As": As,
        "Ac": Ac,
        "Asc": As + Ac,
        "C": math.pi * s.D,
        "D_over_t": s.D / s.t,
        "Vs": As * s.L,
        "Vc": Ac * s.L,
        "xi": (As * s.fy) / (Ac * s.fc),
        "Nu0": Ns + Nc,
        "Ns": Ns,
        "Nc": Nc,
        "SEF": s.D / (s.t * math.sqrt(s.fy / 235.0)),
        "alpha_sc": As / Ac,
        "lambda": 4.0 * s.L / s.D,
    }


def engineer_arrays(D, t, L, fy, fc) -> dict[str, np.ndarray]:
    """Vectorized variant of engineer() over parallel value arrays."""
    D, t, L, fy, fc = (np.asarray(a, dtype=float) for a in (D, t, L, fy, fc))
    inner = D - 2 * t
    As = np.pi * (D * D - inner * inner) / 4.0
    Ac = np.pi * inner * inner / 4.0
    Ns = As * fy / 1e3
    Nc = Ac * fc / 1e3
    return {
        "D": D, "t": t, "L": L, "fy": fy, "fc": fc,
        "As": As, "Ac": Ac, "Asc": As + Ac, "C": np.pi * D,
        "D_over_t": D / t, "Vs": As * L, "Vc": Ac * L,
        "xi": (As * fy) / (Ac * fc), "Nu0": Ns + Nc, "Ns": Ns, "Nc": Nc,
        "SEF": D / (t * np.sqrt(fy / 235.0)),
        "alpha_sc": As / Ac, "lambda": 4.0 * L / D,
    }


def design_matrix(D, t, L, fy, fc, names) -> np.ndarray:
    """Feature matrix with the given column order from raw value arrays."""
    vals = engineer_arrays(D, t, L, fy, fc)
    return np.column_stack([vals[n] for n in names])


@dataclass(frozen=True)
class FeatureFrame:
    """Named column matrix of raw + engineered features with label vector."""

    names: tuple[str, ...]
    X: np.ndarray          # shape (n, len(names))
    y: np.ndarray          # capacity, kN

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[1] != len(self.names):
            raise ValueError("column count does not match names")
        if self.y.shape != (self.X.shape[0],):
            raise ValueError("label length does not match rows")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate feature names")
        unknown = set(self.names) - set(FEATURE_VOCAB)
        if unknown:
            raise ValueError(f"names outside canonical vocabulary: {sorted(unknown)}")

    def __len__(self) -> int:
        return self.X.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]

    def select(self, names) -> "FeatureFrame":
        idx = [self.names.index(n) for n in names]
        return FeatureFrame(tuple(names), self.X[:, idx].copy(), self.y)


def build_frame(specimens, names=None) -> FeatureFrame:
    """Assemble the full raw + engineered frame from specimens."""
    if not specimens:
        raise DataError("no specimens")
    names = tuple(names) if names is not None else tuple(FEATURE_VOCAB)
    rows = np.empty((len(specimens), len(names)))
    y = np.empty(len(specimens))
    for i, s in enumerate(specimens):
        vals = {"D": s.D, "t": s.t, "L": s.L, "fy": s.fy, "fc": s.fc}
        vals.update(engineer(s))
        rows[i] = [vals[n] for n in names]
        y[i] = s.N
    return FeatureFrame(names, rows, y)


def pearson(x, y) -> float:
    """Pearson correlation with population statistics."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson needs two equal-length vectors of length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc) / len(x))
    sy = math.sqrt(float(yc @ yc) / len(y))
    if sx == 0 or sy == 0:
        raise DataError("undefined correlation: zero-variance input")
    rho = float(xc @ yc) / (len(x) * sx * sy)
    return max(-1.0, min(1.0, rho))


@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple[str, ...]     # feature names with label appended
    values: np.ndarray         # symmetric, unit diagonal
    flagged: np.ndarray        # True where a constant column made rho undefined


def correlation_matrix(frame: FeatureFrame) -> CorrelationMatrix:
    """Pairwise Pearson matrix over all columns plus the label."""
    if len(frame) == 0:
        raise DataError("empty frame")
    cols = [frame.column(n) for n in frame.names] + [frame.y]
    names = frame.names + (LABEL_NAME,)
    m = len(cols)
    values = np.eye(m)
    flagged = np.zeros((m, m), dtype=bool)
    for i in range(m):
        for j in range(i + 1, m):
            try:
                rho = pearson(cols[i], cols[j])
            except DataError:
                flagged[i, j] = flagged[j, i] = True
                rho = 0.0
            values[i, j] = values[j, i] = rho
    return CorrelationMatrix(names, values, flagged)


def rank_by_abs_correlation(frame: FeatureFrame) -> list[str]:
    """Feature ranking by |rho| against the label, best first."""
    scores = {}
    for n in frame.names:
        try:
            scores[n] = abs(pearson(frame.column(n), frame.y))
        except DataError:
            scores[n] = -1.0
    return sorted(frame.names, key=lambda n: (-scores[n], FEATURE_VOCAB.index(n)))


def select_features(rank_pcc, rank_shap, rank_mdi, k: int,
                    mode: str = "consensus") -> list[str]:
    """Rank-sum consensus of three feature rankings, or the published list.

    Each ranking is an ordered list, best first, over the same vocabulary.
    Lower rank-sum wins; ties break by canonical vocabulary order.
    """
    if mode == "paper_fixed":
        if k > len(PAPER_SELECTED):
            raise ValueError(f"k={k} exceeds the published list of {len(PAPER_SELECTED)}")
        return PAPER_SELECTED[:k]
    vocab = set(rank_pcc)
    if set(rank_shap) != vocab or set(rank_mdi) != vocab:
        raise ValueError("rankings must cover the same candidate vocabulary")
    if k > len(vocab):
        raise ValueError(f"k={k} exceeds vocabulary size {len(vocab)}")
    sums = {n: rank_pcc.index(n) + rank_shap.index(n) + rank_mdi.index(n) for n in vocab}
    ordered = sorted(vocab, key=lambda n: (sums[n], FEATURE_VOCAB.index(n)
                                           if n in FEATURE_VOCAB else len(FEATURE_VOCAB)))
    return ordered[:k]
