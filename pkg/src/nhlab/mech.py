"""Coupled frictionless oscillator chains with unequal masses.

The second-order dynamics m_i x''_i = -2k x_i + k (x_{i-1} + x_{i+1}) with
fixed walls has the dynamical-matrix form x'' = M x with M = diag(1/m) M0,
M0 tridiagonal (-2k diagonal, k off-diagonals).  M is non-Hermitian for
unequal masses yet its spectrum is real and nonpositive; the eigenfrequencies
are sqrt(-lambda).  A velocity-Verlet integrator provides an independent
time-domain oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .model import spectral_norm


@dataclass(frozen=True)
class OscillatorChain:
    """n masses joined by identical springs k, walls at both ends."""

    n: int
    masses: tuple[float, ...]
    spring_k: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if len(self.masses) != self.n:
            raise ValueError(f"need {self.n} masses, got {len(self.masses)}")
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if min(self.masses) <= 0:
            raise ValueError("all masses must be positive")
        if not self.spring_k > 0:
            raise ValueError(f"spring constant must be positive, got {self.spring_k}")

    def to_dict(self) -> dict:
        return {"n": self.n, "masses": list(self.masses), "spring_k": self.spring_k}


def stiffness_matrix(chain: OscillatorChain) -> np.ndarray:
    """Tridiagonal M0: -2k on the diagonal, k on the off-diagonals."""
    k = chain.spring_k
    m0 = np.zeros((chain.n, chain.n))
    np.fill_diagonal(m0, -2.0 * k)
    for i in range(chain.n - 1):
        m0[i, i + 1] = k
        m0[i + 1, i] = k
    return m0


def dynamical_matrix(chain: OscillatorChain) -> np.ndarray:
    """M = diag(1/m) M0; non-Hermitian whenever the masses differ."""
    inv_m = 1.0 / np.array(chain.masses)
    return (inv_m[:, None] * stiffness_matrix(chain)).astype(complex)


def eigenfrequencies(m: np.ndarray, tol: Tolerances = DEFAULT) -> np.ndarray:
    """sqrt(-lambda) for each eigenvalue, ascending.

    The spectrum is certified real and nonpositive first; violations beyond
    ``mech_spectrum_rel * ||M||`` mean the matrix is not a physical chain.
    """
    m = np.asarray(m, dtype=complex)
    lam = np.linalg.eigvals(m)
    scale = max(spectral_norm(m), 1e-300)
    if np.abs(lam.imag).max() > tol.mech_spectrum_rel * scale:
        raise ValueError(f"non-real eigenvalue (max |Im| = {np.abs(lam.imag).max():.3e})")
    if lam.real.max() > tol.mech_spectrum_rel * scale:
        raise ValueError(f"positive eigenvalue {lam.real.max():.3e}: not a stable chain")
    vals = np.clip(lam.real, None, 0.0)
    return np.sort(np.sqrt(-vals))


def total_energy(chain: OscillatorChain, x: np.ndarray, v: np.ndarray) -> float:
    """Kinetic plus spring energy, including the two wall springs."""
    k = chain.spring_k
    masses = np.array(chain.masses)
    kinetic = 0.5 * float((masses * v * v).sum())
    stretch = float(x[0] ** 2 + x[-1] ** 2 + ((x[1:] - x[:-1]) ** 2).sum()) if chain.n > 1 \
        else float(2.0 * x[0] ** 2)
    return kinetic + 0.5 * k * stretch


@dataclass
class MechTrajectory:
    times: np.ndarray
    positions: np.ndarray       # shape (steps, n)
    velocities: np.ndarray

    def to_csv_rows(self) -> list[list[float]]:
        return [[float(t)] + [float(x) for x in row]
                for t, row in zip(self.times, self.positions)]


def integrate(chain: OscillatorChain, x0: np.ndarray, v0: np.ndarray,
              dt: float, steps: int, tol: Tolerances = DEFAULT) -> MechTrajectory:
    """Velocity-Verlet integration of x'' = M x.

    The per-site masses live inside M, so the update is symplectic for the
    physical phase space; energy errors stay bounded for any run length.
    The step must satisfy dt * max(omega) < integrator_guard.
    """
    m = dynamical_matrix(chain)
    omega_max = eigenfrequencies(m, tol).max()
    if dt * omega_max >= tol.integrator_guard:
        raise ValueError(f"dt * max omega = {dt * omega_max:.3f} exceeds the "
                         f"stability guard {tol.integrator_guard}")
    m = m.real  # chain matrices are real
    x = np.array(x0, dtype=float)
    v = np.array(v0, dtype=float)
    if x.shape != (chain.n,) or v.shape != (chain.n,):
        raise ValueError("x0 and v0 must have length n")

    times = np.arange(steps) * dt
    xs = np.empty((steps, chain.n))
    vs = np.empty((steps, chain.n))
    acc = m @ x
    for i in range(steps):
        xs[i], vs[i] = x, v
        x = x + v * dt + 0.5 * acc * dt * dt
        acc_new = m @ x
        v = v + 0.5 * (acc + acc_new) * dt
        acc = acc_new
    return MechTrajectory(times=times, positions=xs, velocities=vs)


def spectral_peaks(signal: np.ndarray, dt: float, rel_floor: float = 1e-3) -> np.ndarray:
    """Angular frequencies of the spectral peaks of a real signal.

    Hann-windowed FFT magnitude; local maxima above ``rel_floor`` times the
    global peak are refined by quadratic interpolation of the log magnitude.
    """
    sig = np.asarray(signal, dtype=float)
    sig = sig - sig.mean()
    window = np.hanning(len(sig))
    mag = np.abs(np.fft.rfft(sig * window))
    if mag.max() == 0:
        return np.array([])
    floor = rel_floor * mag.max()
    freqs = []
    for i in range(1, len(mag) - 1):
        if mag[i] >= floor and mag[i] > mag[i - 1] and mag[i] >= mag[i + 1]:
            delta = 0.0
            if mag[i - 1] > 0 and mag[i + 1] > 0:
                la, lb, lc = np.log(mag[i - 1]), np.log(mag[i]), np.log(mag[i + 1])
                denom = la - 2 * lb + lc
                delta = 0.5 * (la - lc) / denom if denom != 0 else 0.0
            freqs.append((i + delta) * 2.0 * np.pi / (len(sig) * dt))
    return np.array(sorted(freqs))
