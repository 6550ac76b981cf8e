"""Paired right/left eigensystems with biorthogonal normalization.

Right eigenvectors come from a dense eigensolve of M, left ones from the
transpose problem M^T psi~ = w psi~ (so psi~^T M = w psi~^T).  Pairs are
matched by eigenvalue proximity, then by maximal overlap inside degenerate
clusters; biorthonormal pairs are rescaled so psi~^T psi = 1, self-orthogonal
pairs (EP candidates) are kept at unit 2-norm.  Every returned pair carries a
residual certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT, Tolerances
from .model import spectral_norm

BIORTHONORMAL = "biorthonormal"
SELF_ORTHOGONAL = "self_orthogonal"
UNPAIRED = "unpaired"


class EigensolveError(RuntimeError):
    """Eigensolve failed to converge or missed its residual contract."""


@dataclass
class EigenSystem:
    """Eigenvalues with paired right/left eigenvectors (columns).

    ``eigenvalues`` are sorted by (Re, Im) ascending; ``left_vectors[:, mu]``
    satisfies psi~^T M = w_mu psi~^T and pairs ``right_vectors[:, mu]``.
    ``overlaps[mu]`` is psi~^T psi with both vectors at unit 2-norm (the
    self-orthogonality diagnostic); after construction, biorthonormal pairs
    are stored rescaled so that psi~^T psi = 1.  ``residuals[mu]`` is the max
    of the right and left residual norms per unit eigenvector.
    """

    dim: int
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    pairing: np.ndarray
    norm_status: tuple[str, ...]
    overlaps: np.ndarray
    residuals: np.ndarray
    matrix_norm: float

    def right(self, mu: int) -> np.ndarray:
        return self.right_vectors[:, mu]

    def left(self, mu: int) -> np.ndarray:
        return self.left_vectors[:, mu]

    @property
    def all_biorthonormal(self) -> bool:
        return all(s == BIORTHONORMAL for s in self.norm_status)

    def to_dict(self) -> dict:
        def cvec(v):
            return [[float(z.real), float(z.imag)] for z in v]
        return {
            "dim": self.dim,
            "eigenvalues": cvec(self.eigenvalues),
            "right_vectors": [cvec(self.right_vectors[:, k]) for k in range(self.dim)],
            "left_vectors": [cvec(self.left_vectors[:, k]) for k in range(self.dim)],
            "pairing": [int(p) for p in self.pairing],
            "norm_status": list(self.norm_status),
            "overlaps": cvec(self.overlaps),
            "residuals": [float(r) for r in self.residuals],
            "matrix_norm": self.matrix_norm,
        }


def _clusters(values: np.ndarray, tol_abs: float) -> list[list[int]]:
    """Connected components of |w_i - w_j| <= tol_abs (desk-scale O(n^2))."""
    n = len(values)
    seen = np.zeros(n, dtype=bool)
    out = []
    for i in range(n):
        if seen[i]:
            continue
        stack, comp = [i], []
        seen[i] = True
        while stack:
            k = stack.pop()
            comp.append(k)
            close = np.flatnonzero(~seen & (np.abs(values - values[k]) <= tol_abs))
            seen[close] = True
            stack.extend(close.tolist())
        out.append(sorted(comp))
    return out


def eig_full(m: np.ndarray, tol: Tolerances = DEFAULT) -> EigenSystem:
    """Full biorthogonal eigensystem of a dense complex matrix.

    Raises
    ------
    EigensolveError
        If LAPACK fails to converge or a residual exceeds the certificate
        bound ``residual_rel * ||M||``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    n = m.shape[0]
    norm = spectral_norm(m)
    try:
        w, vr = np.linalg.eig(m)
        wl, vl = np.linalg.eig(m.T)
    except np.linalg.LinAlgError as exc:
        sv = np.linalg.svd(m, compute_uv=False)
        cond = sv[0] / max(sv[-1], 1e-300)
        raise EigensolveError(f"eigensolve failed for {n}x{n} matrix "
                              f"(||M||={norm:.3e}, cond={cond:.3e}): {exc}") from exc

    order = np.lexsort((w.imag, w.real))
    w, vr = w[order], vr[:, order]

    # assign each left eigenvalue to its nearest right eigenvalue's cluster
    clusters = _clusters(w, tol.cluster_rel * norm)
    owner = np.empty(n, dtype=int)       # cluster id per right index
    for cid, comp in enumerate(clusters):
        owner[comp] = cid
    left_of = [[] for _ in clusters]
    for lidx in range(n):
        nearest = int(np.argmin(np.abs(w - wl[lidx])))
        left_of[owner[nearest]].append(lidx)

    left_cols = np.zeros((n, n), dtype=complex)
    pairing = np.full(n, -1, dtype=int)
    status = [UNPAIRED] * n
    overlaps = np.zeros(n, dtype=complex)

    for cid, comp in enumerate(clusters):
        lefts = left_of[cid]
        if len(comp) == 1 and len(lefts) == 1:
            ridx, lidx = comp[0], lefts[0]
            if abs(wl[lidx] - w[ridx]) > tol.pair_rel * norm:
                continue  # stays unpaired
            _assign(ridx, lidx, vr, vl, left_cols, pairing, status, overlaps, tol)
            continue
        # degenerate cluster: greedy maximal-overlap assignment
        if not lefts:
            continue
        ov = np.zeros((len(lefts), len(comp)))
        for a, lidx in enumerate(lefts):
            lv = vl[:, lidx] / np.linalg.norm(vl[:, lidx])
            for b, ridx in enumerate(comp):
                rv = vr[:, ridx] / np.linalg.norm(vr[:, ridx])
                ov[a, b] = abs(lv @ rv)
        free_l, free_r = set(range(len(lefts))), set(range(len(comp)))
        while free_l and free_r:
            a, b = max(((a, b) for a in free_l for b in free_r), key=lambda ab: ov[ab])
            _assign(comp[b], lefts[a], vr, vl, left_cols, pairing, status, overlaps, tol)
            free_l.discard(a)
            free_r.discard(b)

    # residual certificates (per unit vector)
    residuals = np.zeros(n)
    for mu in range(n):
        rv = vr[:, mu]
        res_r = np.linalg.norm(m @ rv - w[mu] * rv) / np.linalg.norm(rv)
        if pairing[mu] >= 0:
            lv = left_cols[:, mu]
            res_l = np.linalg.norm(m.T @ lv - w[mu] * lv) / np.linalg.norm(lv)
        else:
            res_l = 0.0
        residuals[mu] = max(res_r, res_l)
    if residuals.max() > tol.residual_rel * max(norm, 1e-300):
        sv = np.linalg.svd(m, compute_uv=False)
        cond = sv[0] / max(sv[-1], 1e-300)
        raise EigensolveError(f"eigenpair residual {residuals.max():.3e} exceeds "
                              f"{tol.residual_rel:.1e} * ||M|| = {tol.residual_rel * norm:.3e} "
                              f"(cond={cond:.3e})")

    return EigenSystem(dim=n, eigenvalues=w, right_vectors=vr, left_vectors=left_cols,
                       pairing=pairing, norm_status=tuple(status), overlaps=overlaps,
                       residuals=residuals, matrix_norm=norm)


def _assign(ridx, lidx, vr, vl, left_cols, pairing, status, overlaps, tol):
    """Pair one left vector to one right vector, rescaling if possible."""
    rv = vr[:, ridx] / np.linalg.norm(vr[:, ridx])
    lv = vl[:, lidx] / np.linalg.norm(vl[:, lidx])
    p = lv @ rv
    overlaps[ridx] = p
    pairing[ridx] = lidx
    if abs(p) < tol.self_orth:
        vr[:, ridx] = rv
        left_cols[:, ridx] = lv
        status[ridx] = SELF_ORTHOGONAL
    else:
        # split the rescaling symmetrically, principal branch
        scale = np.sqrt(p)
        vr[:, ridx] = rv / scale
        left_cols[:, ridx] = lv / scale
        status[ridx] = BIORTHONORMAL


@dataclass
class MetricPairEntry:
    """Eq.-of-motion pairing of one right mode through the scaling A."""

    mu: int
    nu: int | None           # index of the left vector proportional to (A psi_mu)*
    collinearity: float      # residual of that proportionality
    diagonal: bool           # nu == mu (real-spectrum signature)
    kernel: bool             # A psi_mu ~ 0 (zero-eigenvalue branch)


@dataclass
class MetricPairingReport:
    entries: list[MetricPairEntry]

    @property
    def all_diagonal(self) -> bool:
        return all(e.diagonal for e in self.entries if not e.kernel)

    def to_dict(self) -> dict:
        return {"entries": [{"mu": e.mu, "nu": e.nu, "collinearity": e.collinearity,
                             "diagonal": e.diagonal, "kernel": e.kernel}
                            for e in self.entries],
                "all_diagonal": self.all_diagonal}


def collinearity_residual(x: np.ndarray, y: np.ndarray) -> float:
    """min over complex c of ||x - c y|| / ||x|| (1.0 if y is zero)."""
    nx = np.linalg.norm(x)
    ny2 = np.vdot(y, y).real
    if nx == 0:
        return 0.0
    if ny2 == 0:
        return 1.0
    c = np.vdot(y, x) / ny2
    return float(np.linalg.norm(x - c * y) / nx)


def apply_metric_pairing(es: EigenSystem, a: np.ndarray,
                         tol: Tolerances = DEFAULT) -> MetricPairingReport:
    """Locate, for each right mode, the left mode proportional to (A psi)*.

    For H = H0 A the conjugated image (A psi_mu)* is itself a left
    eigenvector with eigenvalue w_mu*; the permutation mu -> nu it induces is
    diagonal exactly when the spectrum is real.  Modes with A psi_mu ~ 0 are
    reported on the kernel branch (w_mu = 0).
    """
    a = np.asarray(a, dtype=complex)
    entries = []
    for mu in range(es.dim):
        psi = es.right(mu)
        image = a @ psi
        if np.linalg.norm(image) <= tol.kernel_rel * np.linalg.norm(psi):
            entries.append(MetricPairEntry(mu=mu, nu=None, collinearity=0.0,
                                           diagonal=False, kernel=True))
            continue
        target = image.conj()
        resids = [collinearity_residual(target, es.left(nu)) for nu in range(es.dim)]
        nu = int(np.argmin(resids))
        entries.append(MetricPairEntry(mu=mu, nu=nu, collinearity=float(resids[nu]),
                                       diagonal=(nu == mu), kernel=False))
    return MetricPairingReport(entries=entries)
