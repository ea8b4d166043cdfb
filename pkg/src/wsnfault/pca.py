"""Principal component analysis via a cyclic Jacobi eigensolver.

Pipeline: standardize columns, form the sample covariance, eigendecompose,
sort descending, pick the smallest k whose normalized eigenvalue mass
reaches the variance threshold, project.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpectrum,
    DimensionMismatch,
    InvalidCount,
    NoConvergence,
    NotSymmetric,
    TooFewRows,
    ZeroVarianceColumn,
)

SYMMETRY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
JACOBI_SWEEP_CAP = 100


@dataclass(frozen=True)
class PcaModel:
    """Fitted PCA: column statistics, full eigenpairs, retained projection."""

    means: np.ndarray
    stds: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column j pairs with eigenvalues[j]
    retained: int

    def __post_init__(self):
        for name in ("means", "stds", "eigenvalues", "eigenvectors"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        p = self.means.shape[0]
        if self.eigenvectors.shape != (p, p) or self.eigenvalues.shape != (p,):
            raise DimensionMismatch("inconsistent eigenpair shapes")
        if not 1 <= self.retained <= p:
            raise InvalidCount(f"retained must be in [1, {p}], got {self.retained}")
        if np.any(np.diff(self.eigenvalues) > 1e-12):
            raise DegenerateSpectrum("eigenvalues must be sorted descending")
        if np.any(self.eigenvalues < EIGENVALUE_FLOOR):
            raise DegenerateSpectrum("covariance eigenvalues below numerical floor")

    @property
    def n_features(self) -> int:
        return self.means.shape[0]

    @property
    def projection(self) -> np.ndarray:
        """First ``retained`` eigenvector columns."""
        return self.eigenvectors[:, : self.retained]

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "eigenvectors": self.eigenvectors.tolist(),  # row-major
            "retained": self.retained,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(
            np.asarray(d["means"], dtype=float),
            np.asarray(d["stds"], dtype=float),
            np.asarray(d["eigenvalues"], dtype=float),
            np.asarray(d["eigenvectors"], dtype=float),
            int(d["retained"]),
        )


def standardize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center each column and scale to unit sample standard deviation.

    Returns (Z, means, stds). Columns with zero variance are rejected.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewRows("standardize needs a 2-D matrix with >= 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    zero = np.flatnonzero(stds == 0.0)
    if zero.size:
        raise ZeroVarianceColumn(f"zero-variance column(s) at {zero.tolist()}")
    return (X - means) / stds, means, stds


def covariance(Z: np.ndarray) -> np.ndarray:
    """Sample covariance matrix with the n-1 divisor."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise TooFewRows("covariance needs a 2-D matrix with >= 2 rows")
    centered = Z - Z.mean(axis=0)
    C = centered.T @ centered / (Z.shape[0] - 1)
    return 0.5 * (C + C.T)  # scrub round-off asymmetry


def sym_eigen(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues sorted descending and the matching orthonormal
    eigenvector columns. Each eigenvector's largest-magnitude entry is made
    positive so results are deterministic. Convergence: off-diagonal
    Frobenius mass below 1e-12 times the input's Frobenius norm, within
    ``JACOBI_SWEEP_CAP`` sweeps.
    """
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {C.shape}")
    if C.size and np.max(np.abs(C - C.T)) > SYMMETRY_TOL:
        raise NotSymmetric("matrix is not symmetric within 1e-10")
    p = C.shape[0]
    A = 0.5 * (C + C.T)
    V = np.eye(p)
    if p <= 1:
        return np.diag(A).copy(), V

    threshold = 1e-12 * np.linalg.norm(A)
    off_mask = ~np.eye(p, dtype=bool)
    for sweep in range(JACOBI_SWEEP_CAP + 1):
        off = np.sqrt(np.sum(A[off_mask] ** 2))
        if off <= threshold:
            break
        if sweep == JACOBI_SWEEP_CAP:
            raise NoConvergence(f"Jacobi sweeps exceeded cap of {JACOBI_SWEEP_CAP}")
        # One cyclic sweep over the strict upper triangle.
        skip_tol = off / (p * p)
        for i in range(p - 1):
            for j in range(i + 1, p):
                a_ij = A[i, j]
                if abs(a_ij) <= 1e-3 * skip_tol:
                    continue
                # Rotation angle annihilating A[i, j].
                tau = (A[j, j] - A[i, i]) / (2.0 * a_ij)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot_i = A[:, i].copy()
                rot_j = A[:, j].copy()
                A[:, i] = c * rot_i - s * rot_j
                A[:, j] = s * rot_i + c * rot_j
                rot_i = A[i, :].copy()
                rot_j = A[j, :].copy()
                A[i, :] = c * rot_i - s * rot_j
                A[j, :] = s * rot_i + c * rot_j
                A[i, j] = 0.0
                A[j, i] = 0.0
                rot_i = V[:, i].copy()
                rot_j = V[:, j].copy()
                V[:, i] = c * rot_i - s * rot_j
                V[:, j] = s * rot_i + c * rot_j

    eigenvalues = np.diag(A).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    V = V[:, order]
    # Sign convention: largest-magnitude entry of each eigenvector positive.
    anchor = np.argmax(np.abs(V), axis=0)
    flip = V[anchor, np.arange(p)] < 0
    V[:, flip] *= -1.0
    return eigenvalues, V


def select_components(eigenvalues: np.ndarray, threshold: float) -> int:
    """Smallest k whose cumulative normalized eigenvalue sum reaches the threshold.

    Eigenvalues are divided by their total, then cumulatively summed in the
    given (descending) order.
    """
    if not 0.0 < threshold <= 1.0:
        raise InvalidCount(f"threshold must be in (0, 1], got {threshold}")
    lam = np.maximum(np.asarray(eigenvalues, dtype=float), 0.0)
    total = lam.sum()
    if lam.size == 0 or total <= 0.0:
        raise DegenerateSpectrum("all-zero eigenvalue spectrum")
    cumulative = np.cumsum(lam / total)
    # Round-off guard: the last entry is exactly 1 by construction.
    cumulative[-1] = 1.0
    return int(np.searchsorted(cumulative, threshold - 1e-12) + 1)


def fit_pca(X: np.ndarray, threshold: float = 0.995) -> PcaModel:
    """Standardize, eigendecompose the covariance, retain by variance mass."""
    Z, means, stds = standardize(X)
    C = covariance(Z)
    eigenvalues, eigenvectors = sym_eigen(C)
    eigenvalues = np.maximum(eigenvalues, 0.0)
    retained = select_components(eigenvalues, threshold)
    return PcaModel(means, stds, eigenvalues, eigenvectors, retained)


def transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of X onto the retained components."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"expected {model.n_features} columns, got {X.shape}"
        )
    Z = (X - model.means) / model.stds
    return Z @ model.projection


def cumulative_variance(model: PcaModel) -> np.ndarray:
    """Cumulative normalized eigenvalue curve (the component-selection data)."""
    lam = np.maximum(model.eigenvalues, 0.0)
    return np.cumsum(lam / lam.sum())
