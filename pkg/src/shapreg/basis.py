"""Shapley-basis feature maps and design matrices.

The predictor of a Shapley regression is a k-additive cooperative game; its
Choquet integral can be written either in the Moebius basis, as
sum_T m(T) min_{i in T} x_i, or in the interaction-index parameterization,
as sum_A I(A) phi_A(x).  The basis functions here are the min-terms recombined
with the inversion weights of the Moebius<->Shapley bijection, which makes the
two evaluations agree identically and lets a plain logistic regression learn
the interaction indices directly.

Up to pairs the basis has the familiar closed forms:

* phi_{i}(x)   = x_i
* phi_{ij}(x)  = min(x_i, x_j) - (x_i + x_j) / 2

so singleton columns are the raw features and pair columns live in [-1/2, 0],
vanishing on the diagonal x_i = x_j.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .games import (
    coalition_size,
    enumerate_coalitions,
    indices_of,
    interaction_inversion_weights,
    mask_of,
    num_coalitions,
)


def _min_columns(x: np.ndarray, masks: list[int]) -> dict[int, np.ndarray]:
    """min_{i in C} x[:, i] for every coalition C in ``masks``, plus all their
    subcoalitions (the enumeration is size-major, so prefixes exist already)."""
    mins: dict[int, np.ndarray] = {}
    for mask in masks:
        idx = indices_of(mask)
        if len(idx) == 1:
            mins[mask] = x[:, idx[0]]
        else:
            # peel the highest feature; the remainder precedes mask in size-major order
            rest = mask ^ (1 << idx[-1])
            mins[mask] = np.minimum(mins[rest], x[:, idx[-1]])
    return mins


def phi(coalition, x) -> float:
    """Basis function phi_A at a single point x in [0,1]^n.

    Weighted alternating sum of min-terms over the subcoalitions of A, with
    min over the empty coalition taken as 0 (the constant is the bias's job).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("phi expects x in [0,1]^n")
    x = np.clip(x, 0.0, 1.0)
    mask = coalition if isinstance(coalition, int) else mask_of(coalition)
    if mask == 0:
        raise ValueError("phi is undefined for the empty coalition")
    members = indices_of(mask)
    a = len(members)
    if members[-1] >= x.shape[0]:
        raise ValueError(f"coalition {members} exceeds point dimension {x.shape[0]}")
    r = interaction_inversion_weights(a)
    total = 0.0
    for csize in range(1, a + 1):
        w = r[a - csize]
        if w == 0.0:
            continue
        for sub in combinations(members, csize):
            total += w * min(x[i] for i in sub)
    return float(total)


@dataclass(frozen=True)
class DesignMatrix:
    """Dense basis evaluation: one row per sample, one column per coalition in
    canonical order."""

    values: np.ndarray = field(repr=False)
    column_coalitions: list[int]
    n: int
    k: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def design_matrix(x: np.ndarray, k: int) -> DesignMatrix:
    """Evaluate every basis function of order <= k on the rows of x.

    x must already be normalized to [0,1]; column j is phi_A for the j-th
    coalition of enumerate_coalitions(n, k).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D sample matrix, got shape {x.shape}")
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("design_matrix expects inputs normalized to [0,1]")
    x = np.clip(x, 0.0, 1.0)
    n = x.shape[1]
    masks = enumerate_coalitions(n, k)
    mins = _min_columns(x, masks)
    r = interaction_inversion_weights(k)
    cols = np.empty((x.shape[0], len(masks)))
    for j, mask in enumerate(masks):
        members = indices_of(mask)
        a = len(members)
        if a == 1:
            cols[:, j] = mins[mask]
            continue
        col = mins[mask].copy()  # subcoalition C = A, weight r_0 = 1
        for csize in range(1, a):
            w = r[a - csize]
            if w == 0.0:
                continue
            for sub in combinations(members, csize):
                col += w * mins[mask_of(sub)]
        cols[:, j] = col
    return DesignMatrix(values=cols, column_coalitions=masks, n=n, k=k)


def max_row_norm(design: DesignMatrix) -> float:
    """Largest Euclidean row norm of the design; the Lipschitz scale of the
    per-sample logistic loss in these features."""
    return float(np.sqrt((design.values ** 2).sum(axis=1).max()))


def basis_dimension(n: int, k: int) -> int:
    """Number of basis columns (= parameters beside the bias)."""
    return num_coalitions(n, k)
