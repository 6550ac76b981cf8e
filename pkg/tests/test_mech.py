import numpy as np
import pytest

from nhlab.mech import (OscillatorChain, dynamical_matrix, eigenfrequencies,
                        integrate, spectral_peaks, stiffness_matrix, total_energy)
from nhlab.model import spectral_norm


def test_chain_validation():
    with pytest.raises(ValueError):
        OscillatorChain(n=2, masses=(1.0,))
    with pytest.raises(ValueError):
        OscillatorChain(n=2, masses=(1.0, -1.0))
    with pytest.raises(ValueError):
        OscillatorChain(n=1, masses=(1.0,), spring_k=0.0)


def test_two_mass_matrix_and_eigenvalues():
    chain = OscillatorChain(n=2, masses=(1.0, 2.0), spring_k=1.0)
    m = dynamical_matrix(chain)
    assert np.array_equal(m.real, np.array([[-2.0, 1.0], [0.5, -1.0]]))
    lam = np.sort(np.linalg.eigvals(m).real)
    expected = np.sort([(-3 - np.sqrt(3)) / 2, (-3 + np.sqrt(3)) / 2])
    assert np.abs(lam - expected).max() < 1e-10
    freqs = eigenfrequencies(m)
    assert np.allclose(freqs, np.sqrt(-expected[::-1]), atol=1e-10)
    assert freqs[0] == pytest.approx(0.7962252170181258, abs=1e-9)
    assert freqs[1] == pytest.approx(1.5381890013208515, abs=1e-9)


def test_single_mass_frequency():
    chain = OscillatorChain(n=1, masses=(2.5,), spring_k=3.0)
    freqs = eigenfrequencies(dynamical_matrix(chain))
    assert freqs[0] == pytest.approx(np.sqrt(2 * 3.0 / 2.5), rel=1e-12)


def test_equal_masses_closed_form():
    n, mass, k = 7, 1.7, 2.0
    chain = OscillatorChain(n=n, masses=(mass,) * n, spring_k=k)
    m = dynamical_matrix(chain)
    assert np.abs(m - m.conj().T).max() < 1e-15     # Hermitian for equal masses
    lam = np.sort(np.linalg.eigvals(m).real)
    q = np.arange(1, n + 1)
    expected = np.sort(-4 * (k / mass) * np.sin(q * np.pi / (2 * (n + 1))) ** 2)
    assert np.abs(lam - expected).max() < 1e-12


def test_random_masses_real_nonpositive():
    rng = np.random.default_rng(19)
    for _ in range(25):
        n = int(rng.integers(1, 41))
        chain = OscillatorChain(n=n, masses=tuple(rng.uniform(0.2, 5.0, n)))
        lam = np.linalg.eigvals(dynamical_matrix(chain))
        scale = spectral_norm(dynamical_matrix(chain))
        assert np.abs(lam.imag).max() <= 1e-8 * scale
        assert lam.real.max() <= 1e-8 * scale


def test_mass_graded_equivalent_spectrum():
    rng = np.random.default_rng(23)
    n = 12
    chain = OscillatorChain(n=n, masses=tuple(rng.uniform(0.3, 4.0, n)))
    m = dynamical_matrix(chain)
    root = np.diag(1 / np.sqrt(np.array(chain.masses)))
    w = np.sort(np.linalg.eigvals(m).real)
    we = np.sort(np.linalg.eigvalsh(root @ stiffness_matrix(chain) @ root))
    assert np.abs(w - we).max() <= 1e-8 * spectral_norm(m)


def test_eigenfrequencies_reject_unstable():
    with pytest.raises(ValueError, match="positive eigenvalue"):
        eigenfrequencies(np.diag([1.0, -1.0]).astype(complex))
    with pytest.raises(ValueError, match="non-real"):
        eigenfrequencies(np.array([[0, 1], [-1, 0]], dtype=complex))


# ---------------------------------------------------------------------------
# integration oracle

@pytest.fixture(scope="module")
def random_chain():
    rng = np.random.default_rng(3)
    n = 5
    return OscillatorChain(n=n, masses=tuple(rng.uniform(0.5, 3.0, n)), spring_k=1.0)


def test_integrator_guard(random_chain):
    freqs = eigenfrequencies(dynamical_matrix(random_chain))
    with pytest.raises(ValueError, match="guard"):
        integrate(random_chain, np.zeros(5), np.zeros(5), dt=0.2 / freqs.max() * 10,
                  steps=10)


def test_single_mode_stays_pure(random_chain):
    m = dynamical_matrix(random_chain)
    lam, vecs = np.linalg.eig(m)
    idx = int(np.argsort(-lam.real)[2])
    x0 = np.real(vecs[:, idx])
    w_target = float(np.sqrt(-lam.real[idx]))
    freqs = eigenfrequencies(m)
    dt = 0.05 / freqs.max()
    steps = int(100 * 2 * np.pi / w_target / dt)
    traj = integrate(random_chain, x0, np.zeros(5), dt, steps)
    # shape preserved: every snapshot collinear with the initial mode
    k = steps // 3
    overlap = abs(traj.positions[k] @ x0) / (np.linalg.norm(traj.positions[k])
                                             * np.linalg.norm(x0))
    assert overlap > 1 - 1e-6
    # frequency recovered to 0.1% over 100 periods
    site = int(np.argmax(np.abs(x0)))
    peaks = spectral_peaks(traj.positions[:, site], dt, rel_floor=0.5)
    assert abs(peaks - w_target).min() / w_target < 1e-3


def test_energy_conservation(random_chain):
    rng = np.random.default_rng(4)
    freqs = eigenfrequencies(dynamical_matrix(random_chain))
    dt = 0.002 / freqs.max()
    traj = integrate(random_chain, rng.uniform(-1, 1, 5), rng.uniform(-1, 1, 5),
                     dt, 20000)
    energies = [total_energy(random_chain, traj.positions[k], traj.velocities[k])
                for k in range(0, 20000, 200)]
    energies = np.array(energies)
    assert (energies.max() - energies.min()) / energies.mean() <= 1e-6


def test_fourier_recovers_all_excited_frequencies(random_chain):
    rng = np.random.default_rng(5)
    m = dynamical_matrix(random_chain)
    freqs = eigenfrequencies(m)
    dt = 0.05 / freqs.max()
    steps = 1 << 15
    traj = integrate(random_chain, rng.uniform(-1, 1, 5), np.zeros(5), dt, steps)
    peaks = spectral_peaks(traj.positions[:, 0], dt, rel_floor=3e-2)
    resolution = 2 * np.pi / (steps * dt)
    for pk in peaks:
        assert np.abs(freqs - pk).min() <= max(1e-3 * freqs.max(), 2 * resolution)


def test_trajectory_csv_rows(random_chain):
    traj = integrate(random_chain, np.ones(5), np.zeros(5), dt=0.01, steps=3)
    rows = traj.to_csv_rows()
    assert len(rows) == 3
    assert rows[0] == [0.0, 1.0, 1.0, 1.0, 1.0, 1.0]
