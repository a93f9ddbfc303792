"""Monomial dictionaries built from data matrices.

Columns are all monomials of degree at most ``max_degree`` evaluated on the
rows of an m-by-d data matrix, ordered by total degree with lexicographic
tie-breaking (constant column first, then x1, x2, ..., x1^2, x1*x2, ...).
The augmented operator [lam^-1 * I_m, Phi] used by the robust solver is kept
in operator form; the identity block is never materialized.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MultiIndex",
    "DesignMatrix",
    "AugmentedMatrix",
    "enumerate_multi_indices",
    "evaluate_monomial",
    "build_dictionary",
    "normalize_columns",
    "apply_augmented",
    "apply_augmented_adjoint",
    "n_monomials",
]


@dataclass(frozen=True)
class MultiIndex:
    """Exponent vector of one monomial: x1^a1 * ... * xd^ad."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.exponents) == 0:
            raise ValueError("multi-index needs at least one variable")
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"negative exponent in {self.exponents}")

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def __str__(self):
        return "(" + ",".join(str(e) for e in self.exponents) + ")"


def n_monomials(dim: int, max_degree: int) -> int:
    """Number of d-variate monomials of degree <= p: binomial(p+d, d)."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if max_degree < 0:
        raise ValueError(f"max degree must be >= 0, got {max_degree}")
    return math.comb(max_degree + dim, dim)


def enumerate_multi_indices(dim: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices with |alpha| <= max_degree, in graded order.

    Primary key is total degree; within a degree, ties are broken so that
    mass on earlier variables comes first: 1, x1, x2, ..., x1^2, x1*x2, ...
    The constant index is always element 0.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if max_degree < 0:
        raise ValueError(f"max degree must be >= 0, got {max_degree}")
    out = []
    for deg in range(max_degree + 1):
        # combinations_with_replacement yields sorted variable tuples in
        # ascending lexicographic order, which maps exactly to the column
        # order above (x1^2 before x1*x2 before x2^2).
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            exps = [0] * dim
            for var in combo:
                exps[var] += 1
            out.append(MultiIndex(tuple(exps)))
    return out


def evaluate_monomial(alpha: MultiIndex, x) -> float:
    """Evaluate x^alpha at a single point, with the 0^0 = 1 convention."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != alpha.dim:
        raise ValueError(
            f"point has dimension {x.shape}, multi-index expects {alpha.dim}"
        )
    out = 1.0
    for xj, aj in zip(x, alpha.exponents):
        if aj:
            out *= xj ** aj
    return float(out)


@dataclass(frozen=True)
class DesignMatrix:
    """Monomial dictionary: values[i, j] = indices[j] evaluated on row i.

    ``column_scales[j]`` is the factor the j-th raw column was divided by
    (all ones unless :func:`normalize_columns` was applied). A coefficient
    vector solved against ``values`` converts back to the raw-column scale
    via ``c_raw = c_solved / column_scales``.
    """

    values: np.ndarray
    indices: list[MultiIndex]
    column_scales: np.ndarray
    dim: int
    max_degree: int

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


def build_dictionary(data: np.ndarray, max_degree: int) -> DesignMatrix:
    """Assemble the m-by-r dictionary of all monomials up to max_degree.

    ``data`` is the m-by-d matrix whose rows are evaluation points. Column
    order follows :func:`enumerate_multi_indices`; scales start at 1.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError(f"data must be a 2-d matrix, got shape {data.shape}")
    m, dim = data.shape
    if m < 1:
        raise ValueError("data matrix has no rows")
    indices = enumerate_multi_indices(dim, max_degree)
    values = np.empty((m, len(indices)))
    # Fill degree by degree, reusing the previous power of each variable.
    # pow_cache[a] holds data[:, j] ** a for the exponents seen so far.
    pow_cache = [{} for _ in range(dim)]
    for j, idx in enumerate(indices):
        col = np.ones(m)
        for var, exp in enumerate(idx.exponents):
            if exp == 0:
                continue
            cache = pow_cache[var]
            if exp not in cache:
                cache[exp] = data[:, var] ** exp
            col = col * cache[exp]
        values[:, j] = col
    return DesignMatrix(
        values=values,
        indices=indices,
        column_scales=np.ones(len(indices)),
        dim=dim,
        max_degree=max_degree,
    )


def normalize_columns(phi: DesignMatrix) -> DesignMatrix:
    """Rescale every column to unit Euclidean norm.

    The original norms are recorded in ``column_scales`` so solved
    coefficients can be mapped back to the raw dictionary.
    """
    norms = np.linalg.norm(phi.values, axis=0)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise ValueError(
            f"cannot normalize: column {zero[0]} (monomial "
            f"{phi.indices[zero[0]]}) is identically zero"
        )
    return DesignMatrix(
        values=phi.values / norms,
        indices=phi.indices,
        column_scales=phi.column_scales * norms,
        dim=phi.dim,
        max_degree=phi.max_degree,
    )


@dataclass(frozen=True)
class AugmentedMatrix:
    """Virtual operator A = [lam^-1 * I_m, Phi] of shape m x (m + r)."""

    phi: DesignMatrix
    lam: float

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def n_rows(self) -> int:
        return self.phi.n_rows

    @property
    def total_cols(self) -> int:
        return self.phi.n_rows + self.phi.n_cols

    def dense(self) -> np.ndarray:
        """Materialize the full matrix; for tests and tiny instances only."""
        m = self.n_rows
        return np.hstack([np.eye(m) / self.lam, self.phi.values])


def apply_augmented(aug: AugmentedMatrix, w: np.ndarray) -> np.ndarray:
    """Compute A @ w = w[:m] / lam + Phi @ w[m:] without forming A."""
    w = np.asarray(w, dtype=float)
    if w.shape != (aug.total_cols,):
        raise ValueError(
            f"vector has shape {w.shape}, operator expects ({aug.total_cols},)"
        )
    m = aug.n_rows
    return w[:m] / aug.lam + aug.phi.values @ w[m:]


def apply_augmented_adjoint(aug: AugmentedMatrix, v: np.ndarray) -> np.ndarray:
    """Compute A.T @ v = [v / lam, Phi.T @ v]."""
    v = np.asarray(v, dtype=float)
    if v.shape != (aug.n_rows,):
        raise ValueError(
            f"vector has shape {v.shape}, adjoint expects ({aug.n_rows},)"
        )
    return np.concatenate([v / aug.lam, aug.phi.values.T @ v])
