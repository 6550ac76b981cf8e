"""Lasing thresholds of lossy coupled-cavity chains under localized pumping.

Each site is a cavity with uniform loss kappa0 (a -i*kappa0 on the diagonal);
pumping adds +i*gamma on the pumped sites.  The threshold is the smallest
gamma at which some eigenvalue reaches the real axis, found by bracketing
and bisection on max Im(w); modes are followed in gamma by eigenvector
overlap so the crossing mode can be identified unambiguously.  Power flows
at the coupling junctions quantify the exchange with the environment that
sets the threshold scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .config import DEFAULT, Tolerances
from .model import spectral_norm


class NoThresholdError(RuntimeError):
    """No eigenvalue crossed the real axis below gamma_max."""


class TrackingAmbiguityError(RuntimeError):
    """Eigenvector overlaps too close to call; a finer gamma grid is needed."""


@dataclass(frozen=True)
class PumpSpec:
    """Uniform cavity loss plus a pump on selected sites (1-based)."""

    kappa0: float
    pumped_sites: tuple[int, ...]
    gamma: float = 0.0

    def __post_init__(self):
        if not self.kappa0 > 0:
            raise ValueError(f"kappa0 must be positive, got {self.kappa0}")
        if not self.pumped_sites:
            raise ValueError("pumped_sites must be nonempty")
        object.__setattr__(self, "pumped_sites",
                           tuple(int(j) for j in self.pumped_sites))
        if self.gamma < 0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")

    def to_dict(self) -> dict:
        return {"kappa0": self.kappa0, "pumped_sites": list(self.pumped_sites),
                "gamma": self.gamma}

    @classmethod
    def from_dict(cls, d: dict) -> "PumpSpec":
        known = {"kappa0", "pumped_sites", "gamma"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown pump fields: {sorted(unknown)}")
        kwargs = dict(d)
        kwargs["pumped_sites"] = tuple(kwargs["pumped_sites"])
        return cls(**kwargs)


def pump_indicator(pump: PumpSpec, n: int) -> np.ndarray:
    """Diagonal 0/1 indicator of the pumped sites."""
    for j in pump.pumped_sites:
        if not 1 <= j <= n:
            raise ValueError(f"pumped site {j} outside 1..{n}")
    p = np.zeros((n, n))
    for j in pump.pumped_sites:
        p[j - 1, j - 1] = 1.0
    return p


def pumped_hamiltonian(h: np.ndarray, pump: PumpSpec,
                       gamma: float | None = None) -> np.ndarray:
    """H - i*kappa0*I + i*gamma*P (loss and pump are purely diagonal)."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    g = pump.gamma if gamma is None else gamma
    return h - 1j * pump.kappa0 * np.eye(n) + 1j * g * pump_indicator(pump, n)


@dataclass
class Trajectory:
    """Eigenvalues followed along a pump-strength grid.

    ``eigenvalues[k, mu]`` is mode mu at gammas[k]; mode identity is kept by
    maximal eigenvector overlap between consecutive grid points, starting
    from the (Re, Im)-sorted order at the first point.  ``zero_mode_index``
    flags the mode whose Re(w) stays pinned at zero, if there is exactly one.
    """

    gammas: np.ndarray
    eigenvalues: np.ndarray          # shape (len(gammas), n)
    final_vectors: np.ndarray        # eigenvectors at the last grid point
    zero_mode_index: int | None

    def mode(self, mu: int) -> np.ndarray:
        return self.eigenvalues[:, mu]


def track_mode(h: np.ndarray, pump: PumpSpec, gamma_grid: np.ndarray,
               tol: Tolerances = DEFAULT) -> Trajectory:
    """Follow every eigenvalue of the pumped Hamiltonian along the grid."""
    gamma_grid = np.asarray(gamma_grid, dtype=float)
    if len(gamma_grid) < 2 or np.any(np.diff(gamma_grid) <= 0) or gamma_grid[0] < 0:
        raise ValueError("gamma_grid must be ascending and start at >= 0")
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    norm = max(spectral_norm(h), 1e-300)

    traj = np.zeros((len(gamma_grid), n), dtype=complex)
    w, v = np.linalg.eig(pumped_hamiltonian(h, pump, gamma_grid[0]))
    order = np.lexsort((w.imag, w.real))
    w, v = w[order], v[:, order]
    v = v / np.linalg.norm(v, axis=0)
    traj[0] = w

    for k in range(1, len(gamma_grid)):
        wn, vn = np.linalg.eig(pumped_hamiltonian(h, pump, gamma_grid[k]))
        vn = vn / np.linalg.norm(vn, axis=0)
        overlaps = np.abs(v.conj().T @ vn)           # [prev, new]
        perm = np.full(n, -1, dtype=int)
        used = np.zeros(n, dtype=bool)
        for prev in range(n):
            row = overlaps[prev].copy()
            row[used] = -1.0
            best = int(np.argmax(row))
            rest = row.copy()
            rest[best] = -1.0
            second = rest.max()
            if second > 0 and (row[best] - second) < tol.track_margin * row[best]:
                raise TrackingAmbiguityError(
                    f"overlap tie at gamma={gamma_grid[k]:.6g} "
                    f"({row[best]:.4f} vs {second:.4f}); refine the grid")
            perm[prev] = best
            used[best] = True
        w, v = wn[perm], vn[:, perm]
        traj[k] = w

    pinned = np.flatnonzero(np.abs(traj.real).max(axis=0) <= tol.zero_mode_rel * norm)
    zero_idx = int(pinned[0]) if len(pinned) == 1 else None
    return Trajectory(gammas=gamma_grid, eigenvalues=traj, final_vectors=v,
                      zero_mode_index=zero_idx)


@dataclass
class ThresholdResult:
    """First real-axis crossing of the pumped spectrum."""

    threshold: float                  # pump strength at the crossing
    crossing_mode_index: int          # index in the tracked order
    threshold_mode: np.ndarray        # eigenvector, normalized to psi_1 = 1
    trajectory: Trajectory
    bracket: tuple[float, float]

    def to_dict(self) -> dict:
        return {"threshold": self.threshold,
                "crossing_mode_index": self.crossing_mode_index,
                "threshold_mode": [[z.real, z.imag] for z in self.threshold_mode],
                "bracket": list(self.bracket),
                "trajectory": {
                    "gammas": [float(g) for g in self.trajectory.gammas],
                    "crossing_mode": [[z.real, z.imag] for z in
                                      self.trajectory.mode(self.crossing_mode_index)],
                }}


def find_threshold(h: np.ndarray, pump: PumpSpec, tol: Tolerances = DEFAULT,
                   grid_points: int = 33) -> ThresholdResult:
    """Smallest gamma with max Im(w) = 0, by bracketing plus bisection.

    The bracket expands geometrically from kappa0; bisection stops when the
    crossing mode's |Im w| drops below ``threshold_imag * kappa0``.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    k0 = pump.kappa0

    def max_imag(g: float) -> float:
        return float(np.linalg.eigvals(pumped_hamiltonian(h, pump, g)).imag.max())

    lo, hi = 0.0, k0
    f_hi = max_imag(hi)
    while f_hi < 0:
        lo, hi = hi, 2 * hi
        if hi > tol.gamma_max_factor * k0:
            raise NoThresholdError(
                f"no real-axis crossing below {tol.gamma_max_factor:g} * kappa0")
        f_hi = max_imag(hi)

    gstar = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = max_imag(mid)
        if abs(f) <= tol.threshold_imag * k0:
            gstar = mid
            break
        if f < 0:
            lo = mid
        else:
            hi = mid
    else:
        raise NoThresholdError("bisection failed to meet the Im(w) tolerance")

    wa, va = np.linalg.eig(pumped_hamiltonian(h, pump, gstar))
    cross = int(np.argmax(wa.imag))
    vec = va[:, cross]
    if abs(vec[0]) < 1e-12 * np.linalg.norm(vec):
        raise ValueError("threshold mode vanishes at site 1; "
                         "the psi_1 = 1 normalization is undefined")
    vec = vec / vec[0]

    grid = np.linspace(0.0, gstar, grid_points)
    trajectory = track_mode(h, pump, grid, tol)
    # identify the crossing mode inside the tracked order by final overlap
    vfin = trajectory.final_vectors
    overlaps = np.abs(vfin.conj().T @ (vec / np.linalg.norm(vec)))
    mode_idx = int(np.argmax(overlaps))

    return ThresholdResult(threshold=float(gstar), crossing_mode_index=mode_idx,
                           threshold_mode=vec, trajectory=trajectory,
                           bracket=(float(lo), float(hi)))


@dataclass
class PowerFlowReport:
    """Steady-state power bookkeeping of one mode at threshold.

    ``junction_gains[j]`` is the net exchange with the environment at the
    coupling between sites j+1 and j+2 (1-based; centered at j + 3/2), zero
    for symmetric couplings.  ``balance_residual`` is |sum of all site terms
    and junction gains|, which vanishes at threshold.
    """

    junction_gains: np.ndarray
    site_terms: np.ndarray
    flows_forward: np.ndarray        # P_{j,j+1}: power into site j from j+1
    flows_backward: np.ndarray       # P_{j+1,j}: power into site j+1 from j
    balance_residual: float
    max_term: float

    def to_dict(self) -> dict:
        return {"junction_gains": [float(g) for g in self.junction_gains],
                "site_terms": [float(x) for x in self.site_terms],
                "flows_forward": [float(x) for x in self.flows_forward],
                "flows_backward": [float(x) for x in self.flows_backward],
                "balance_residual": self.balance_residual,
                "max_term": self.max_term}

    @property
    def balanced(self) -> bool:
        return self.balance_residual <= DEFAULT.balance_rel * self.max_term


def power_flows(mode: np.ndarray, h_a: np.ndarray, pump: PumpSpec,
                gamma: float | None = None) -> PowerFlowReport:
    """Junction gains and site gain/loss terms for a threshold mode.

    Couplings are the off-diagonal entries of the construction matrix (the
    loss and pump only touch the diagonal of ``h_a``).  The mode is
    normalized to psi_1 = 1, matching the junction-gain convention.
    """
    v = np.asarray(mode, dtype=complex)
    if abs(v[0]) == 0:
        raise ValueError("mode vanishes at site 1; cannot normalize psi_1 = 1")
    v = v / v[0]
    h_a = np.asarray(h_a, dtype=complex)
    n = len(v)
    g = pump.gamma if gamma is None else gamma

    gammas = np.zeros(n)
    for j in pump.pumped_sites:
        gammas[j - 1] = g
    site_terms = 2.0 * (gammas - pump.kappa0) * np.abs(v) ** 2

    fwd = np.zeros(n - 1)
    bwd = np.zeros(n - 1)
    gains = np.zeros(n - 1)
    for j in range(n - 1):
        t_fwd = h_a[j, j + 1]        # t_{j,j+1}
        t_bwd = h_a[j + 1, j]        # t_{j+1,j}
        fwd[j] = 2.0 * np.real(1j * np.conj(t_fwd) * np.conj(v[j + 1]) * v[j])
        bwd[j] = 2.0 * np.real(1j * np.conj(t_bwd) * np.conj(v[j]) * v[j + 1])
        gains[j] = fwd[j] + bwd[j]

    residual = abs(site_terms.sum() + gains.sum())
    max_term = float(max(np.abs(site_terms).max(initial=0.0),
                         np.abs(gains).max(initial=0.0), 1e-300))
    return PowerFlowReport(junction_gains=gains, site_terms=site_terms,
                           flows_forward=fwd, flows_backward=bwd,
                           balance_residual=float(residual), max_term=max_term)


def pump_at(pump: PumpSpec, gamma: float) -> PumpSpec:
    """Copy of the pump with its strength set (threshold evaluation helper)."""
    return replace(pump, gamma=float(gamma))
