"""Fitted Shapley regression models: normalization, prediction, serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .basis import design_matrix
from .games import Basis, SetFunction, num_coalitions


@dataclass(frozen=True)
class ShapleyModel:
    """Bias plus interaction indices of order <= k, with the min-max
    normalization learned at fit time.

    ``indices`` is aligned with the canonical coalition order; the logit of a
    point is bias + sum_A I(A) phi_A(x_normalized).
    """

    feature_names: list[str]
    k: int
    bias: float
    indices: np.ndarray = field(repr=False)
    normalization: np.ndarray = field(repr=False)  # shape (n, 2): per-feature (min, max)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=float)
        norm = np.asarray(self.normalization, dtype=float)
        n = len(self.feature_names)
        if idx.shape != (num_coalitions(n, self.k),):
            raise ValueError(
                f"expected {num_coalitions(n, self.k)} indices for (n={n}, k={self.k}), "
                f"got shape {idx.shape}"
            )
        if norm.shape != (n, 2):
            raise ValueError(f"normalization must have shape ({n}, 2), got {norm.shape}")
        if np.any(norm[:, 0] > norm[:, 1]):
            raise ValueError("normalization requires min <= max per feature")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "normalization", norm)
        idx.setflags(write=False)
        norm.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.feature_names)

    def index_set_function(self) -> SetFunction:
        return SetFunction(n=self.n, k=self.k, basis=Basis.SHAPLEY, values=self.indices)

    def normalize(self, x_raw: np.ndarray) -> np.ndarray:
        """Map raw inputs through the stored min-max bounds, clipping to [0,1].

        Features that were constant on the training data map to 0.
        """
        x = np.atleast_2d(np.asarray(x_raw, dtype=float))
        if x.shape[1] != self.n:
            raise ValueError(f"model has {self.n} features, input has {x.shape[1]}")
        lo, hi = self.normalization[:, 0], self.normalization[:, 1]
        span = hi - lo
        safe = np.where(span > 0, span, 1.0)
        out = (x - lo) / safe
        out[:, span == 0] = 0.0
        return np.clip(out, 0.0, 1.0)

    def logit_normalized(self, x_norm: np.ndarray) -> np.ndarray:
        """Logits for inputs already in [0,1]^n (skips normalization)."""
        design = design_matrix(np.atleast_2d(x_norm), self.k)
        return self.bias + design.values @ self.indices

    def logit(self, x_raw: np.ndarray) -> np.ndarray:
        return self.logit_normalized(self.normalize(x_raw))

    def predict_proba(self, x_raw: np.ndarray) -> np.ndarray:
        """P(y=1) per row, strictly inside (0,1)."""
        return expit(self.logit(x_raw))

    def predict(self, x_raw: np.ndarray) -> np.ndarray:
        """Labels at threshold 0.5; a probability of exactly 0.5 is positive."""
        return (self.predict_proba(x_raw) >= 0.5).astype(int)

    def to_json(self) -> str:
        # json round-trips Python floats through repr, which is bit-exact
        payload = {
            "n": self.n,
            "k": self.k,
            "bias": self.bias,
            "feature_names": list(self.feature_names),
            "normalization": [[float(lo), float(hi)] for lo, hi in self.normalization],
            "indices": [float(v) for v in self.indices],
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ShapleyModel":
        payload = json.loads(text)
        model = cls(
            feature_names=[str(s) for s in payload["feature_names"]],
            k=int(payload["k"]),
            bias=float(payload["bias"]),
            indices=np.asarray(payload["indices"], dtype=float),
            normalization=np.asarray(payload["normalization"], dtype=float),
        )
        if model.n != int(payload["n"]):
            raise ValueError("inconsistent feature count in model file")
        return model

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ShapleyModel":
        with open(path) as fh:
            return cls.from_json(fh.read())
