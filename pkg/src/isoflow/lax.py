"""Matrix-level Lax pair for the KdV flow and the unitary flow it generates.

``h(s) = -D^2 + V(s)`` and ``A(s) = i(-4 D^3 + 6 V D + 3 V')`` on a periodic
grid, with ``i dh/ds = [A, h]`` and ``i dU/ds = A U``, ``U(0) = 1``.

Residuals are Frobenius norms restricted to the resolved Fourier subspace
``|k| <= resolved_fraction * k_max`` (default one half). Near the Nyquist
wavenumber the discrete product rule ``D(Vf) = V Df + V' f`` fails through
aliasing, so the full-matrix identities only hold up to O(1) errors there;
below ``k_max - 2 k_V`` (``k_V`` the bandwidth of V) they hold to spectral
accuracy. ``norm="full"`` gives the unrestricted number for diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import UnitarityError
from .grid import Field, Grid, differentiation_matrix, spectral_derivative
from .kdv import FlowTrajectory, KdvParams, advance, kdv_rhs
from .schrodinger import OperatorMatrix, build_hamiltonian

UNITARITY_ABORT = 1e-6
RESOLVED_FRACTION = 0.5

Norm = Literal["resolved", "full"]


def _require_periodic(grid: Grid, what: str) -> None:
    if not grid.periodic:
        raise ValueError(f"{what} requires a periodic grid")


@lru_cache(maxsize=16)
def resolved_projector(grid: Grid, fraction: float = RESOLVED_FRACTION) -> np.ndarray:
    """Orthogonal projector onto Fourier modes with ``|k| <= fraction * k_max``."""
    _require_periodic(grid, "resolved_projector")
    keep = (np.abs(grid.wavenumbers) <= fraction * grid.k_max + 1e-12).astype(float)
    p = np.real(np.fft.ifft(keep[:, None] * np.fft.fft(np.eye(grid.n), axis=0), axis=0))
    p = 0.5 * (p + p.T)
    p.flags.writeable = False
    return p


def operator_norm(m: np.ndarray, grid: Grid, norm: Norm = "resolved") -> float:
    if norm == "full":
        return float(np.linalg.norm(m))
    if norm != "resolved":
        raise ValueError(f"unknown norm {norm!r}")
    p = resolved_projector(grid)
    return float(np.linalg.norm(p @ m @ p))


def position_operator(grid: Grid) -> OperatorMatrix:
    """Multiplication by q. On periodic grids this is the sawtooth coordinate."""
    return OperatorMatrix(np.diag(grid.points), grid)


def momentum_operator(grid: Grid) -> OperatorMatrix:
    _require_periodic(grid, "momentum_operator")
    return OperatorMatrix(-1j * differentiation_matrix(grid, 1), grid)


def _a_literal(v: Field) -> np.ndarray:
    grid = v.grid
    d1 = differentiation_matrix(grid, 1)
    d3 = differentiation_matrix(grid, 3)
    vq = spectral_derivative(v.values, grid, 1)
    return 1j * (-4 * d3 + 6 * v.values[:, None] * d1 + 3 * np.diag(vq))


def build_a_operator(v: Field) -> OperatorMatrix:
    """Hermitian part of ``i(-4 D^3 + 6 V D + 3 V')``.

    ``asymmetry`` records ``|M - M^H|_F / |M|_F`` of the unsymmetrized matrix.
    """
    _require_periodic(v.grid, "build_a_operator")
    m = _a_literal(v)
    asym = float(np.linalg.norm(m - m.conj().T) / np.linalg.norm(m))
    return OperatorMatrix(0.5 * (m + m.conj().T), v.grid, asymmetry=asym)


def a_operator_asymmetry(v: Field, norm: Norm = "full") -> float:
    """Relative anti-Hermitian defect of the unsymmetrized operator in the chosen norm."""
    m = _a_literal(v)
    return operator_norm(m - m.conj().T, v.grid, norm) / operator_norm(m, v.grid, norm)


@dataclass(frozen=True, eq=False)
class LaxPair:
    h: OperatorMatrix
    a: OperatorMatrix

    @property
    def asymmetry(self) -> float:
        return self.a.asymmetry

    def commutator(self) -> np.ndarray:
        a, h = self.a.entries, self.h.entries
        return a @ h - h @ a


def lax_pair(v: Field) -> LaxPair:
    return LaxPair(build_hamiltonian(v), build_a_operator(v))


def _relative(num: float, den: float, scale: float) -> float:
    # both sides vanish identically (e.g. V = 0): defined as zero
    if den < 1e-14 * max(scale, 1.0):
        return 0.0
    return num / den


def lax_residual(
    traj: FlowTrajectory, j: int, delta: float, norm: Norm = "resolved", params: KdvParams | None = None
) -> float:
    """``|i (h(s+d) - h(s-d)) / 2d - [A, h]| / |[A, h]|`` at snapshot ``j``.

    The neighbours ``s_j +- delta`` are obtained by re-running the flow from
    snapshot ``j`` forwards and backwards with step ``min(ds, delta)``.
    """
    s_j, v = traj[j]
    grid = v.grid
    _require_periodic(grid, "lax_residual")
    base = params or traj.params
    step = KdvParams(min(base.ds, delta), base.scheme, base.dealias)
    v_plus = advance(v, delta, step)
    v_minus = advance(v, -delta, step)
    lhs = 1j * np.diag(v_plus.values - v_minus.values) / (2 * delta)
    pair = lax_pair(v)
    rhs = pair.commutator()
    scale = np.linalg.norm(pair.a.entries) * np.linalg.norm(pair.h.entries)
    return _relative(operator_norm(lhs - rhs, grid, norm), operator_norm(rhs, grid, norm), scale)


@dataclass(frozen=True, eq=False)
class UnitaryFlow:
    s_values: np.ndarray
    u: tuple[OperatorMatrix, ...]
    unitarity_defect: float

    @property
    def grid(self) -> Grid:
        return self.u[0].grid

    def __len__(self) -> int:
        return len(self.u)


def _hermite_midpoint(v0: np.ndarray, v1: np.ndarray, d0: np.ndarray, d1: np.ndarray, h: float, t: float):
    """Cubic Hermite interpolant on [0, h] evaluated at fraction ``t``."""
    h00 = 2 * t**3 - 3 * t**2 + 1
    h10 = t**3 - 2 * t**2 + t
    h01 = -2 * t**3 + 3 * t**2
    h11 = t**3 - t**2
    return h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1


def _expm_hermitian(a: np.ndarray, dt: float) -> np.ndarray:
    w, vecs = np.linalg.eigh(a)
    return (vecs * np.exp(-1j * dt * w)) @ vecs.conj().T


def evolve_unitary(traj: FlowTrajectory, substeps: int = 1) -> UnitaryFlow:
    """Step ``U(s + d) = exp(-i d A(s + d/2)) U(s)`` across the trajectory.

    Each snapshot interval is split into ``substeps`` equal steps; V at the
    step midpoints comes from cubic Hermite interpolation in s using the KdV
    right-hand side as the s-derivative at the snapshots.
    """
    grid = traj.grid
    _require_periodic(grid, "evolve_unitary")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    dealias = traj.params.dealias
    eye = np.eye(grid.n, dtype=complex)
    u = eye.copy()
    mats = [OperatorMatrix(eye, grid, hermitian=False)]
    worst = 0.0
    fields = traj.fields
    rates = [kdv_rhs(f, dealias).values for f in fields]
    for j in range(len(fields) - 1):
        h = traj.s_values[j + 1] - traj.s_values[j]
        dt = h / substeps
        for m in range(substeps):
            t = (m + 0.5) / substeps
            vm = _hermite_midpoint(fields[j].values, fields[j + 1].values, rates[j], rates[j + 1], h, t)
            a = build_a_operator(Field(grid, vm)).entries
            u = _expm_hermitian(a, dt) @ u
        defect = float(np.linalg.norm(u.conj().T @ u - eye))
        worst = max(worst, defect)
        if defect > UNITARITY_ABORT:
            raise UnitarityError(f"|U^H U - 1| = {defect:.3e} at s={traj.s_values[j + 1]:g}")
        mats.append(OperatorMatrix(u.copy(), grid, hermitian=False))
    return UnitaryFlow(np.array(traj.s_values), tuple(mats), worst)


def free_unitary(grid: Grid, s: float) -> np.ndarray:
    """Closed form for V = 0: ``A = -4i D^3`` is constant, so ``U(s) = exp(-4 s D^3)``."""
    mult = np.exp(-4 * s * (1j * grid.wavenumbers) ** 3)
    mult[grid.n // 2] = 1.0
    return np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(grid.n), axis=0), axis=0)


def conjugation_residual(flow: UnitaryFlow, traj: FlowTrajectory, j: int, norm: Norm = "resolved") -> float:
    """``|U(s_j) h(0) U(s_j)^H - h(s_j)| / |h(s_j)|``."""
    if len(flow) != len(traj) or not np.allclose(flow.s_values, traj.s_values, rtol=0, atol=1e-14):
        raise ValueError("unitary flow and trajectory must share their s grid")
    if j == 0:
        return 0.0
    u = flow.u[j].entries
    h0 = build_hamiltonian(traj.fields[0]).entries
    hs = build_hamiltonian(traj.fields[j]).entries
    grid = traj.grid
    return operator_norm(u @ h0 @ u.conj().T - hs, grid, norm) / operator_norm(hs, grid, norm)


def transformed_canonicals(flow: UnitaryFlow, j: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    """``(U^-1 q U, U^-1 p U)`` at flow index ``j``."""
    grid = flow.grid
    u = flow.u[j].entries
    q = position_operator(grid).entries
    p = momentum_operator(grid).entries
    uh = u.conj().T
    qs = uh @ q @ u
    ps = uh @ p @ u
    return OperatorMatrix(0.5 * (qs + qs.conj().T), grid), OperatorMatrix(0.5 * (ps + ps.conj().T), grid)


def commutator(x: np.ndarray | OperatorMatrix, y: np.ndarray | OperatorMatrix) -> np.ndarray:
    a = x.entries if isinstance(x, OperatorMatrix) else x
    b = y.entries if isinstance(y, OperatorMatrix) else y
    return a @ b - b @ a


@dataclass(frozen=True)
class CanonicalCheck:
    commutator_defect: float  # |[q_s, p_s] - U^H [q, p] U| / |[q, p]|
    commutator_spectrum_defect: float
    position_spectrum_defect: float
    literal_commutator_shift: float  # |[q_s, p_s] - [q, p]| / |[q, p]|

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_canonicals(flow: UnitaryFlow, j: int) -> CanonicalCheck:
    """Similarity identities for the transformed canonical pair.

    On a finite grid ``[q, p]`` is not a multiple of the identity, so the
    exact statement is ``[q_s, p_s] = U^H [q, p] U``; the literal shift from
    ``[q, p]`` is reported alongside.
    """
    grid = flow.grid
    u = flow.u[j].entries
    q = position_operator(grid).entries
    p = momentum_operator(grid).entries
    qs, ps = transformed_canonicals(flow, j)
    c0 = commutator(q, p)
    cs = commutator(qs, ps)
    scale = np.linalg.norm(c0)
    conj = u.conj().T @ c0 @ u
    # i[q, p] is Hermitian, so its spectrum is real
    e0 = np.linalg.eigvalsh(1j * c0)
    es = np.linalg.eigvalsh(1j * cs)
    q0 = np.sort(grid.points)
    qspec = np.linalg.eigvalsh(qs.entries)
    return CanonicalCheck(
        commutator_defect=float(np.linalg.norm(cs - conj) / scale),
        commutator_spectrum_defect=float(np.max(np.abs(es - e0)) / np.max(np.abs(e0))),
        position_spectrum_defect=float(np.max(np.abs(qspec - q0)) / np.max(np.abs(q0))),
        literal_commutator_shift=float(np.linalg.norm(cs - c0) / scale),
    )
