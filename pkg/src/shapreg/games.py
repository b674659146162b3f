"""Set functions over feature coalitions and the transforms between their bases.

A coalition is a subset of the feature universe {0, ..., n-1}, encoded as an
integer bit-mask (bit i set <=> feature i in the coalition).  A set function
assigns one real value to every non-empty coalition of size <= k; the empty
coalition is never stored (its value is zero by convention and, in a model,
is absorbed by the bias term).

Three bases are supported:

* ``capacity`` -- raw game values v(A), stored for every non-empty subset.
* ``mobius``   -- Moebius coefficients m(A); k-additivity means m(A) = 0
  for |A| > k, so only the low-order entries exist.
* ``shapley``  -- interaction indices I(A).  Singletons are Shapley values,
  pairs measure synergy (> 0) or redundancy (< 0).

The canonical coalition order is size-major: singletons ascending, then pairs
in lexicographic order, then triples, and so on.  All vectors in this package
are aligned to that order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb

import numpy as np

# Full-order operations need 2^n values; the bit-mask convention also assumes
# masks fit comfortably in an int64 when handed to numpy.
MAX_FULL_ORDER_N = 62


class Basis(str, Enum):
    CAPACITY = "capacity"
    MOBIUS = "mobius"
    SHAPLEY = "shapley"


def mask_of(indices) -> int:
    """Bit-mask of an iterable of feature indices."""
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    """Sorted feature indices contained in a bit-mask."""
    out = []
    i = 0
    while mask >> i:
        if (mask >> i) & 1:
            out.append(i)
        i += 1
    return tuple(out)


def coalition_size(mask: int) -> int:
    return int(mask).bit_count()


def num_coalitions(n: int, k: int) -> int:
    """Number of non-empty coalitions of size <= k, sum_{j=1..k} C(n, j)."""
    _check_universe(n, k)
    return sum(comb(n, j) for j in range(1, k + 1))


def _check_universe(n: int, k: int) -> None:
    if n < 1:
        raise ValueError(f"universe size must be >= 1, got n={n}")
    if k < 1:
        raise ValueError(f"additivity order must be >= 1, got k={k}")
    if k > n:
        raise ValueError(f"additivity order k={k} exceeds universe size n={n}")
    if k > 3 and n > MAX_FULL_ORDER_N:
        raise ValueError(
            f"n={n} unsupported for order k={k}; full-order style enumerations "
            f"are capped at n={MAX_FULL_ORDER_N}"
        )


def enumerate_coalitions(n: int, k: int) -> list[int]:
    """All non-empty coalition masks with size <= k, in canonical order.

    Canonical order is size-major, lexicographic within a size: {0}, {1}, ...,
    {n-1}, {0,1}, {0,2}, ..., {n-2,n-1}, {0,1,2}, ...
    """
    _check_universe(n, k)
    masks = []
    for size in range(1, k + 1):
        for combo in combinations(range(n), size):
            masks.append(mask_of(combo))
    return masks


def coalition_index(n: int, k: int) -> dict[int, int]:
    """Mapping mask -> position in the canonical order of enumerate_coalitions."""
    return {m: i for i, m in enumerate(enumerate_coalitions(n, k))}


@dataclass(frozen=True)
class SetFunction:
    """A real-valued set function on coalitions of size <= k, in a fixed basis.

    ``values`` is aligned with ``enumerate_coalitions(n, k)``.  A cooperative
    game is a SetFunction in the capacity basis; no monotonicity or
    normalization is enforced anywhere.
    """

    n: int
    k: int
    basis: Basis
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_universe(self.n, self.k)
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] != num_coalitions(self.n, self.k):
            raise ValueError(
                f"expected {num_coalitions(self.n, self.k)} values for "
                f"(n={self.n}, k={self.k}), got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("set function values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "basis", Basis(self.basis))
        vals.setflags(write=False)

    def coalitions(self) -> list[int]:
        return enumerate_coalitions(self.n, self.k)

    def value(self, coalition) -> float:
        """Value of one coalition, given as an iterable of indices or a mask."""
        mask = coalition if isinstance(coalition, int) else mask_of(coalition)
        if mask == 0:
            return 0.0
        idx = coalition_index(self.n, self.k).get(mask)
        if idx is None:
            raise KeyError(f"coalition {indices_of(mask)} not stored (size > k?)")
        return float(self.values[idx])

    def to_json(self) -> str:
        entries = [
            {"coalition": list(indices_of(m)), "value": float(v)}
            for m, v in zip(self.coalitions(), self.values)
        ]
        payload = {
            "n": self.n,
            "k": self.k,
            "basis": self.basis.value,
            "entries": entries,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SetFunction":
        payload = json.loads(text)
        n, k = int(payload["n"]), int(payload["k"])
        index = coalition_index(n, k)
        values = np.full(len(index), np.nan)
        for entry in payload["entries"]:
            mask = mask_of(entry["coalition"])
            if mask not in index:
                raise ValueError(f"unexpected coalition {entry['coalition']}")
            if not np.isnan(values[index[mask]]):
                raise ValueError(f"duplicate coalition {entry['coalition']}")
            values[index[mask]] = float(entry["value"])
        if np.any(np.isnan(values)):
            raise ValueError("missing coalition entries")
        return cls(n=n, k=k, basis=Basis(payload["basis"]), values=values)


def _require_basis(sf: SetFunction, basis: Basis, op: str) -> None:
    if sf.basis is not basis:
        raise ValueError(f"{op} expects a {basis.value}-basis set function, got {sf.basis.value}")


def _to_lattice(sf: SetFunction) -> np.ndarray:
    """Scatter canonical-order values into a 2^n array indexed by mask."""
    full = np.zeros(1 << sf.n)
    full[np.fromiter(sf.coalitions(), dtype=np.int64)] = sf.values
    return full


def _from_lattice(full: np.ndarray, n: int, k: int, basis: Basis) -> SetFunction:
    masks = np.fromiter(enumerate_coalitions(n, k), dtype=np.int64)
    return SetFunction(n=n, k=k, basis=basis, values=full[masks])


def mobius_from_capacity(mu: SetFunction) -> SetFunction:
    """Moebius coefficients of a full-order game: m(A) = sum_{B<=A} (-1)^{|A\\B|} v(B).

    Computed with the in-place subset-lattice transform, one bit at a time;
    exact inverse of :func:`capacity_from_mobius`.
    """
    _require_basis(mu, Basis.CAPACITY, "mobius_from_capacity")
    if mu.k != mu.n:
        raise ValueError("mobius_from_capacity needs a full-order game (k = n)")
    if mu.n > MAX_FULL_ORDER_N:
        raise ValueError(f"full-order transform capped at n={MAX_FULL_ORDER_N}")
    f = _to_lattice(mu)
    masks = np.arange(1 << mu.n)
    for i in range(mu.n):
        bit = 1 << i
        has = (masks & bit) != 0
        f[has] -= f[masks[has] ^ bit]
    return _from_lattice(f, mu.n, mu.n, Basis.MOBIUS)


def capacity_from_mobius(m: SetFunction) -> SetFunction:
    """Game values from Moebius coefficients: v(A) = sum_{B<=A} m(B).

    Always returns a full-order game; a k-additive input is implicitly padded
    with zeros above order k.
    """
    _require_basis(m, Basis.MOBIUS, "capacity_from_mobius")
    if m.n > MAX_FULL_ORDER_N:
        raise ValueError(f"full-order transform capped at n={MAX_FULL_ORDER_N}")
    lifted = m if m.k == m.n else SetFunction(
        n=m.n, k=m.n, basis=Basis.MOBIUS,
        values=np.concatenate([m.values, np.zeros(num_coalitions(m.n, m.n) - m.values.size)]),
    )
    f = _to_lattice(lifted)
    masks = np.arange(1 << m.n)
    for i in range(m.n):
        bit = 1 << i
        has = (masks & bit) != 0
        f[has] += f[masks[has] ^ bit]
    return _from_lattice(f, m.n, m.n, Basis.CAPACITY)


def _subsets(mask: int):
    """All submasks of ``mask``, including 0 and mask itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def shapley_from_mobius(m: SetFunction) -> SetFunction:
    """Interaction indices from Moebius coefficients.

    I(A) = sum over supersets B >= A (|B| <= k) of m(B) / (|B| - |A| + 1).
    Consequences used throughout: I(A) = m(A) at the top order |A| = k, and
    the singleton indices sum to v(F) = sum_T m(T) (efficiency).
    """
    _require_basis(m, Basis.MOBIUS, "shapley_from_mobius")
    index = coalition_index(m.n, m.k)
    out = np.zeros_like(m.values)
    for mask, v in zip(m.coalitions(), m.values):
        if v == 0.0:
            continue
        b = coalition_size(mask)
        for sub in _subsets(mask):
            if sub == 0:
                continue
            out[index[sub]] += v / (b - coalition_size(sub) + 1)
    return SetFunction(n=m.n, k=m.k, basis=Basis.SHAPLEY, values=out)


def interaction_inversion_weights(max_order: int) -> np.ndarray:
    """Weights r_d inverting the superset-averaging map of shapley_from_mobius.

    Defined by r_0 = 1 and sum_{d=0..e} C(e,d) r_d / (e-d+1) = 0 for e >= 1,
    so that m(A) = sum_{B >= A} r_{|B|-|A|} I(B) exactly.  (These are the
    Bernoulli numbers: 1, -1/2, 1/6, 0, -1/30, ...)
    """
    r = np.zeros(max_order + 1)
    r[0] = 1.0
    for e in range(1, max_order + 1):
        r[e] = -sum(comb(e, d) * r[d] / (e - d + 1) for d in range(e))
    return r


def mobius_from_shapley(index_fn: SetFunction) -> SetFunction:
    """Moebius coefficients from interaction indices (inverse of shapley_from_mobius).

    For k <= 2 this is the closed form m({i,j}) = I({i,j}) and
    m({i}) = I({i}) - 1/2 sum_j I({i,j}); for larger k the same superset sum
    with the higher-order inversion weights solves the triangular system.
    """
    _require_basis(index_fn, Basis.SHAPLEY, "mobius_from_shapley")
    n, k = index_fn.n, index_fn.k
    index = coalition_index(n, k)
    r = interaction_inversion_weights(k)
    out = np.zeros_like(index_fn.values)
    for mask, v in zip(index_fn.coalitions(), index_fn.values):
        if v == 0.0:
            continue
        b = coalition_size(mask)
        for sub in _subsets(mask):
            if sub == 0:
                continue
            out[index[sub]] += r[b - coalition_size(sub)] * v
    return SetFunction(n=n, k=k, basis=Basis.MOBIUS, values=out)


def truncate_k_additive(m: SetFunction, k: int) -> SetFunction:
    """Drop Moebius coefficients of order > k; lower orders are untouched.

    Size-major canonical order makes this a prefix slice.  Idempotent, and the
    identity when k >= the stored order.
    """
    _require_basis(m, Basis.MOBIUS, "truncate_k_additive")
    if k < 1:
        raise ValueError(f"additivity order must be >= 1, got k={k}")
    if k >= m.k:
        return m
    return SetFunction(n=m.n, k=k, basis=Basis.MOBIUS,
                       values=m.values[: num_coalitions(m.n, k)].copy())


def _check_unit_box(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12) or np.any(x > 1 + 1e-12):
        raise ValueError("inputs must lie in [0,1]; normalize upstream")
    return np.clip(x, 0.0, 1.0)


def choquet_mobius(m: SetFunction, x) -> float:
    """Choquet integral of x in [0,1]^n via Moebius coefficients:
    sum_T m(T) * min_{i in T} x_i.
    """
    _require_basis(m, Basis.MOBIUS, "choquet_mobius")
    x = _check_unit_box(x)
    if x.shape != (m.n,):
        raise ValueError(f"expected a point in R^{m.n}, got shape {x.shape}")
    total = 0.0
    for mask, v in zip(m.coalitions(), m.values):
        if v == 0.0:
            continue
        total += v * min(x[i] for i in indices_of(mask))
    return float(total)
