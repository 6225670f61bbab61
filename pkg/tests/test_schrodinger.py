import math

import numpy as np
import pytest

from isoflow.errors import ConvergenceError
from isoflow.grid import make_grid, sample, zeros
from isoflow.kdv import KdvParams, SolitonParams, evolve, soliton_potential
from isoflow.schrodinger import (
    OperatorMatrix,
    build_hamiltonian,
    eigen,
    hermitian_defect,
    isospectrality_report,
)


def test_particle_in_a_box():
    n = 256
    g = make_grid(n, math.pi, "box")
    spec = eigen(build_hamiltonian(zeros(g)), 3)
    np.testing.assert_allclose(spec.eigenvalues, [1, 4, 9], atol=1e-3)


def test_constant_shift():
    g = make_grid(64, 10.0, "box")
    base = eigen(build_hamiltonian(zeros(g)), vectors=False).eigenvalues
    shifted = eigen(build_hamiltonian(sample(g, lambda q: 0.75 + 0 * q)), vectors=False).eigenvalues
    np.testing.assert_allclose(shifted, base + 0.75, atol=1e-10)


@pytest.mark.parametrize("kind", ["periodic", "box"])
def test_soliton_single_bound_state(kind):
    g = make_grid(400, 40.0, kind)
    center = 0.0 if kind == "periodic" else 20.0
    spec = eigen(build_hamiltonian(soliton_potential(g, SolitonParams(4.0, center))), 3, vectors=False)
    assert np.sum(spec.eigenvalues < 0) == 1
    assert spec.eigenvalues[0] == pytest.approx(-1.0, abs=1e-4)


def test_hamiltonian_is_hermitian():
    for kind in ("periodic", "box"):
        h = build_hamiltonian(sample(make_grid(64, 20.0, kind), lambda q: np.cos(q)))
        assert h.hermitian_defect < 1e-12


def test_operator_matrix_rejects_non_hermitian():
    with pytest.raises(ValueError):
        OperatorMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    m = OperatorMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]), hermitian=False)
    assert m.hermitian_defect == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        OperatorMatrix(np.zeros((2, 3)), hermitian=False)


def test_eigen_trivial_examples():
    assert np.all(eigen(np.eye(5)).eigenvalues == 1)
    np.testing.assert_array_equal(eigen(np.diag(np.arange(1.0, 9.0))).eigenvalues, np.arange(1.0, 9.0))


def test_eigen_unitary_invariance():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40))
    m = 0.5 * (x + x.conj().T)
    u, _ = np.linalg.qr(rng.normal(size=(40, 40)) + 1j * rng.normal(size=(40, 40)))
    conj = u @ m @ u.conj().T
    conj = 0.5 * (conj + conj.conj().T)
    np.testing.assert_allclose(eigen(m).eigenvalues, eigen(conj).eigenvalues, atol=1e-9)


def test_eigenvectors_orthonormal_and_deterministic():
    h = build_hamiltonian(sample(make_grid(64, 20.0), lambda q: -np.exp(-(q**2))))
    a, b = eigen(h, 5), eigen(h, 5)
    v = a.eigenvectors
    np.testing.assert_allclose(v.conj().T @ v, np.eye(5), atol=1e-10)
    assert np.array_equal(v, b.eigenvectors)
    assert a.residual < 1e-8 * np.abs(h.entries).sum(axis=0).max()


def test_eigen_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_convergence_error_is_numerical():
    assert issubclass(ConvergenceError, ArithmeticError)


def test_hermitian_defect_of_zero():
    assert hermitian_defect(np.zeros((3, 3))) == 0.0


def test_isospectrality_zero_trajectory(grid256):
    traj = evolve(zeros(grid256), 0.01, KdvParams(1e-3), 2)
    rep = isospectrality_report(traj, 3)
    assert rep.max_drift == 0.0
    assert rep.passed
    assert rep.to_dict()["bound_state_counts"] == [0, 0, 0]


def test_isospectrality_soliton_short_run(grid256):
    traj = evolve(soliton_potential(grid256, SolitonParams(4.0, -5.0)), 0.5, KdvParams(5e-4), 2)
    rep = isospectrality_report(traj, 1)
    assert rep.passed and rep.max_drift < 1e-4
    assert rep.eigenvalues[0, 0] == pytest.approx(-1.0, abs=1e-4)
    assert list(rep.bound_state_counts) == [1, 1, 1]


def test_isospectrality_rejects_zero_states(grid256):
    traj = evolve(zeros(grid256), 0.01, KdvParams(1e-3))
    with pytest.raises(ValueError):
        isospectrality_report(traj, 0)
