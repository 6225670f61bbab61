"""Discretized Schrodinger operators ``-d^2/dq^2 + V`` and their spectra."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import ConvergenceError
from .grid import Field, Grid, differentiation_matrix
from .kdv import FlowTrajectory

HERMITIAN_TOL = 1e-12
EIGEN_RESIDUAL_TOL = 1e-8


def hermitian_defect(m: np.ndarray) -> float:
    scale = np.linalg.norm(m)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(m - m.conj().T) / scale)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix acting on functions sampled on ``grid``.

    With ``hermitian=True`` the matrix must be self-adjoint to within
    ``HERMITIAN_TOL`` relative Frobenius defect.
    """

    entries: np.ndarray
    grid: Optional[Grid] = None
    hermitian: bool = True
    asymmetry: float = 0.0  # defect before symmetrization, where one was applied
    hermitian_defect: float = field(init=False)

    def __post_init__(self):
        m = np.array(self.entries)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)
        defect = hermitian_defect(m)
        object.__setattr__(self, "hermitian_defect", defect)
        if self.hermitian and defect >= HERMITIAN_TOL:
            raise ValueError(f"operator declared self-adjoint has Hermitian defect {defect:.3e}")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return self.entries @ other.entries
        return self.entries @ other


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residual: float

    def __len__(self) -> int:
        return len(self.eigenvalues)


def laplacian_matrix(grid: Grid) -> np.ndarray:
    """Symmetric second-derivative matrix for the grid's boundary kind.

    Periodic grids use the exact spectral matrix. Box grids use the 4th-order
    five-point stencil with the Dirichlet condition imposed by odd reflection
    across each wall, which keeps the matrix symmetric.
    """
    if grid.periodic:
        return differentiation_matrix(grid, 2)
    n, h = grid.n, grid.spacing
    lap = (
        np.diag(np.full(n, -5 / 2))
        + np.diag(np.full(n - 1, 4 / 3), 1)
        + np.diag(np.full(n - 1, 4 / 3), -1)
        + np.diag(np.full(n - 2, -1 / 12), 2)
        + np.diag(np.full(n - 2, -1 / 12), -2)
    )
    # ghost value f(-h) = -f(h) at the left wall, likewise at the right
    lap[0, 0] += 1 / 12
    lap[-1, -1] += 1 / 12
    return lap / h**2


def build_hamiltonian(v: Field) -> OperatorMatrix:
    return OperatorMatrix(-laplacian_matrix(v.grid) + np.diag(v.values), v.grid)


def _operator_scale(m: np.ndarray) -> float:
    # induced 1-norm bounds the spectral norm of a Hermitian matrix from above
    return float(np.max(np.sum(np.abs(m), axis=0)))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)


def eigen(m: OperatorMatrix | np.ndarray, k: Optional[int] = None, vectors: bool = True) -> Spectrum:
    """Lowest ``k`` eigenpairs (all when ``k`` is None) of a Hermitian matrix.

    Eigenvectors are phase-fixed so the largest component is real and
    positive; results are reproducible run to run.
    """
    a = m.entries if isinstance(m, OperatorMatrix) else np.asarray(m)
    if hermitian_defect(a) >= HERMITIAN_TOL:
        raise ValueError("eigen: matrix is not Hermitian")
    n = a.shape[0]
    subset = None if k is None or k >= n else (0, k - 1)
    w, v = scipy.linalg.eigh(a, subset_by_index=subset)
    v = _fix_signs(v)
    residual = float(np.max(np.linalg.norm(a @ v - v * w, axis=0))) if len(w) else 0.0
    scale = _operator_scale(a)
    if residual > EIGEN_RESIDUAL_TOL * max(scale, 1.0):
        raise ConvergenceError(f"eigensolver residual {residual:.3e} exceeds bound (|M| ~ {scale:.3e})")
    return Spectrum(w, v if vectors else None, residual)


@dataclass(frozen=True, eq=False)
class IsospectralityReport:
    s_values: np.ndarray
    eigenvalues: np.ndarray  # (snapshots, k)
    drift: np.ndarray  # max_j |E_i(s_j) - E_i(0)|
    bound_state_counts: np.ndarray
    tolerance: float

    @property
    def max_drift(self) -> float:
        return float(np.max(self.drift)) if self.drift.size else 0.0

    @property
    def passed(self) -> bool:
        return self.max_drift < self.tolerance

    def to_dict(self) -> dict:
        return {
            "s_values": self.s_values.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "drift": self.drift.tolist(),
            "max_drift": self.max_drift,
            "bound_state_counts": self.bound_state_counts.tolist(),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def isospectrality_report(
    traj: FlowTrajectory, k_bound_states: int, tolerance: float = 1e-4, threshold: float = 0.0
) -> IsospectralityReport:
    """Track the ``k`` lowest eigenvalues of ``-d^2 + V(., s)`` across the trajectory.

    ``threshold`` is the continuum edge (the common edge value of V) used to
    count bound states.
    """
    if k_bound_states < 1:
        raise ValueError("k_bound_states must be >= 1")
    rows, counts = [], []
    for _, v in traj:
        spec = eigen(build_hamiltonian(v), k_bound_states, vectors=False)
        rows.append(spec.eigenvalues)
        counts.append(int(np.sum(spec.eigenvalues < threshold)))
    values = np.array(rows)
    drift = np.max(np.abs(values - values[0]), axis=0)
    return IsospectralityReport(np.array(traj.s_values), values, drift, np.array(counts), tolerance)
