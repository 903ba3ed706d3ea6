"""Reference-free matrix-level matching predictors (the lrsm.* features).

Eleven predictors computed from the matching matrix alone, covering
dominance (precision-leaning), norm/uncertainty (recall-leaning),
spectral shape, confidence aggregates and assignment structure.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

LRSM_FEATURE_NAMES = (
    "lrsm.dominants",
    "lrsm.norm_1",
    "lrsm.norm_inf",
    "lrsm.norm_frob",
    "lrsm.sv1_ratio",
    "lrsm.sv2_ratio",
    "lrsm.avg_conf_nonzero",
    "lrsm.std_conf_nonzero",
    "lrsm.max_conf",
    "lrsm.nonzero_ratio",
    "lrsm.bmm_mass_ratio",
)


def _dominants_fraction(matrix: np.ndarray) -> float:
    """Fraction of nonzero entries that are strict maxima of both their
    row and their column.  Ties do not count."""
    rows, cols = np.nonzero(matrix)
    if len(rows) == 0:
        return 0.0
    dominant = 0
    for r, c in zip(rows, cols):
        v = matrix[r, c]
        row_rest = np.delete(matrix[r, :], c)
        col_rest = np.delete(matrix[:, c], r)
        if (row_rest.size == 0 or v > row_rest.max()) and (
            col_rest.size == 0 or v > col_rest.max()
        ):
            dominant += 1
    return dominant / len(rows)


def _max_assignment_mass(matrix: np.ndarray) -> float:
    """Weight of a maximum-weight one-to-one assignment of entries."""
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return float(matrix[rows, cols].sum())


def lrsm_features(matrix: np.ndarray) -> dict[str, float]:
    """All eleven predictors, keyed by their stable lrsm.* names."""
    n, m = matrix.shape
    cells = n * m
    nonzero = matrix[matrix > 0]

    total = float(matrix.sum())
    singular = np.linalg.svd(matrix, compute_uv=False)
    sv_sum = float(singular.sum())

    features = {
        "lrsm.dominants": _dominants_fraction(matrix),
        "lrsm.norm_1": float(np.abs(matrix).sum()) / cells,
        "lrsm.norm_inf": float(np.abs(matrix).max()) if cells else 0.0,
        "lrsm.norm_frob": float(np.sqrt((matrix**2).sum())) / np.sqrt(cells),
        "lrsm.sv1_ratio": float(singular[0]) / sv_sum if sv_sum > 0 else 0.0,
        "lrsm.sv2_ratio": (
            float(singular[1]) / sv_sum if sv_sum > 0 and len(singular) > 1 else 0.0
        ),
        "lrsm.avg_conf_nonzero": float(nonzero.mean()) if nonzero.size else 0.0,
        "lrsm.std_conf_nonzero": float(nonzero.std()) if nonzero.size else 0.0,
        "lrsm.max_conf": float(nonzero.max()) if nonzero.size else 0.0,
        "lrsm.nonzero_ratio": nonzero.size / cells,
        "lrsm.bmm_mass_ratio": _max_assignment_mass(matrix) / total if total > 0 else 1.0,
    }
    return features
