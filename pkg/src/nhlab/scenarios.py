"""Config-driven scenario runner: figure reproductions, the ratio
calibration, property suites, and machine-readable outputs.

Every scenario is a pure function of its config (plus the calibration
record it may consume); outputs are written deterministically so reruns are
byte-identical.  Timestamps go only to the sidecar ``run.log``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .config import DEFAULT, Tolerances
from .eig import collinearity_residual, eig_full
from .laser import PumpSpec, find_threshold, power_flows, pumped_hamiltonian, track_mode
from .mech import (OscillatorChain, dynamical_matrix, eigenfrequencies,
                   integrate, spectral_peaks, total_energy)
from .model import (LatticeSpec, build_h0, build_scaling, construct_gauge,
                    construct_product, spectral_norm)
from .perturb import first_order, matrix_elements
from .properties import SUITE_NAMES, run_properties
from .skin import (CSV_HEADER, mode_reports, verify_selective_skin,
                   verify_standard_skin, zero_mode_equality)
from .spectra import certify, ep_analyze

SCENARIOS = ("fig1", "fig2", "fig3", "fig4", "fig5", "oscillators",
             "properties", "calibrate_s", "custom")

# anchors from the figure captions and threshold table
ANCHOR_NEXT_TO_ZERO = 2.38          # |w| of the first nonzero pair of H, in units of t
ANCHOR_GAUGE = 0.618                # same for the similarity-transformed chain
THRESHOLD_TABLE = {                 # kappa0/t -> (D/kappa0 selective, D/kappa0 standard)
    0.02: (1.44, 4.99),
    1.0: (1.35, 1.62),
}


class CalibrationError(RuntimeError):
    """No scaling ratio in range reproduces the spectral anchor."""


@dataclass
class ScenarioConfig:
    scenario: str
    lattice: LatticeSpec | None = None
    pump: PumpSpec | None = None
    tolerances: dict[str, float] = field(default_factory=dict)
    out_dir: str = "out"
    format: str = "csv"            # csv | json
    seed: int = 1
    trials: int = 200
    anchor: float = ANCHOR_NEXT_TO_ZERO
    n: int = 9

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ScenarioConfig":
        known = {"scenario", "lattice", "pump", "tolerances", "output", "seed",
                 "trials", "anchor", "n"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kwargs: dict[str, Any] = {k: d[k] for k in
                                  ("scenario", "seed", "trials", "anchor", "n") if k in d}
        if d.get("lattice") is not None:
            kwargs["lattice"] = LatticeSpec.from_dict(d["lattice"])
        if d.get("pump") is not None:
            kwargs["pump"] = PumpSpec.from_dict(d["pump"])
        if d.get("tolerances"):
            kwargs["tolerances"] = dict(d["tolerances"])
        out = d.get("output", {})
        if out:
            extra = set(out) - {"path", "format"}
            if extra:
                raise ValueError(f"unknown output fields: {sorted(extra)}")
            if "path" in out:
                kwargs["out_dir"] = out["path"]
            if "format" in out:
                kwargs["format"] = out["format"]
        return cls(**kwargs)

    def tol(self) -> Tolerances:
        return DEFAULT.with_overrides(self.tolerances)


@dataclass
class Assertion:
    name: str
    passed: bool
    measured: Any
    expected: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "measured": self.measured, "expected": self.expected}

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: measured {self.measured} (want {self.expected})"


def _assert_le(name: str, value: float, limit: float) -> Assertion:
    return Assertion(name=name, passed=bool(value <= limit),
                     measured=float(value), expected=f"<= {limit:g}")


def _assert_true(name: str, flag: bool, detail: Any = True) -> Assertion:
    return Assertion(name=name, passed=bool(flag), measured=detail, expected="true")


@dataclass
class ScenarioResult:
    scenario: str
    assertions: list[Assertion]
    tables: dict[str, tuple[list[str], list[list]]]   # name -> (header, rows)
    report: dict[str, Any]
    files: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)


# ---------------------------------------------------------------------------
# calibration

def smallest_nonzero_abs(h: np.ndarray, tol: Tolerances = DEFAULT) -> float:
    """Smallest |w| over eigenvalues that are not numerically zero."""
    w = np.abs(np.linalg.eigvals(h))
    nonzero = w[w > tol.zero_mode_rel * max(spectral_norm(h), 1e-300)]
    if not len(nonzero):
        raise ValueError("spectrum is entirely zero")
    return float(nonzero.min())


def _product_pair(n: int, s: float, t: float = 1.0,
                  tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    spec = LatticeSpec(n=n, t=t, scaling="geometric", s=s)
    h0 = build_h0(spec)
    a = build_scaling(spec)
    return construct_product(h0, a, tol), construct_gauge(h0, a, tol)


def calibrate_s(anchor: float = ANCHOR_NEXT_TO_ZERO, n: int = 9, t: float = 1.0,
                tol: Tolerances = DEFAULT,
                s_range: tuple[float, float] = (1.01, 4.0)) -> dict:
    """Find the geometric ratio that puts the first nonzero |w| at anchor*t.

    Scans a logarithmic grid for a sign change of the gap, bisects it, then
    cross-checks the calibrated ratio against the threshold table.  Returns
    the calibration record (also consumed by the fig2/3/5 scenarios).
    """
    def gap(s: float) -> float:
        h, _ = _product_pair(n, s, t, tol)
        return smallest_nonzero_abs(h, tol) / t - anchor

    grid = np.geomspace(s_range[0], s_range[1], 121)
    values = [gap(s) for s in grid]
    bracket = None
    for i in range(len(grid) - 1):
        if values[i] == 0 or values[i] * values[i + 1] < 0:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        best = int(np.argmin(np.abs(values)))
        raise CalibrationError(
            f"no s in [{s_range[0]}, {s_range[1]}] reaches anchor {anchor}; "
            f"best s = {grid[best]:.6f} with gap {values[best]:.3e}")

    lo, hi = bracket
    glo = gap(lo)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        gm = gap(mid)
        if glo * gm <= 0:
            hi = mid
        else:
            lo, glo = mid, gm
    s_cal = 0.5 * (lo + hi)
    achieved = gap(s_cal) + anchor

    h, hpp = _product_pair(n, s_cal, t, tol)
    checks = {}
    all_ok = abs(achieved - anchor) <= 1e-3
    for kappa_over_t, (d_sel, d_std) in THRESHOLD_TABLE.items():
        pump = PumpSpec(kappa0=kappa_over_t * t, pumped_sites=(1,))
        got_sel = find_threshold(h, pump, tol).threshold / pump.kappa0
        got_std = find_threshold(hpp, pump, tol).threshold / pump.kappa0
        ok = (abs(got_sel - d_sel) <= 0.01 * d_sel
              and abs(got_std - d_std) <= 0.01 * d_std)
        all_ok = all_ok and ok
        checks[str(kappa_over_t)] = {"selective": got_sel, "standard": got_std,
                                     "expected": [d_sel, d_std], "within_1pct": ok}

    return {"s": float(s_cal), "anchor": anchor, "achieved": float(achieved),
            "n": n, "t": t, "threshold_checks": checks, "all_ok": bool(all_ok)}


def load_or_calibrate(out_dir: Path, tol: Tolerances) -> dict:
    path = out_dir / "calibration.json"
    if path.exists():
        record = json.loads(path.read_text())
        if "s" not in record:
            raise CalibrationError(f"{path} is not a calibration record")
        return record
    record = calibrate_s(tol=tol)
    out_dir.mkdir(parents=True, exist_ok=True)
    path.write_text(_json_text(record))
    return record


# ---------------------------------------------------------------------------
# figure scenarios

def scenario_fig1(cfg: ScenarioConfig, tol: Tolerances) -> ScenarioResult:
    """Harmonic chain: discrete low levels vs the continuum rule, and the
    spectral stretch caused by a random positive scaling."""
    spec = cfg.lattice or LatticeSpec(n=100, t=1.0, onsite="harmonic",
                                      omega2=1.0 / 1000.0, scaling="random",
                                      seed=cfg.seed)
    if spec.onsite != "harmonic" or spec.omega2 <= 0:
        raise ValueError("fig1 needs a harmonic lattice with omega2 > 0")
    t = abs(spec.t)
    h0 = build_h0(spec)
    a = build_scaling(spec)
    h = construct_product(h0, a, tol)
    w0 = np.sort(np.linalg.eigvalsh(h0))
    es = eig_full(h, tol)
    w = es.eigenvalues

    assertions = [
        _assert_le("fig1.reality_max_imag", np.abs(w.imag).max(),
                   tol.reality_rel * es.matrix_norm),
    ]
    omega_tilde = np.sqrt(spec.omega2) * np.sqrt(2.0 * t)
    level_rows = []
    for q in range(1, 6):
        approx = (q - 0.5) * omega_tilde - 2.0 * t
        dev = abs(w0[q - 1] - approx) / omega_tilde
        level_rows.append([q, float(w0[q - 1]), float(approx), float(dev)])
        assertions.append(_assert_le(f"fig1.harmonic_level_q{q}", dev, 0.05))
    lo_contained = w.real.min() < w0[0]
    hi_contained = w.real.max() > w0[-1]
    assertions.append(_assert_true("fig1.spread_contains_h0",
                                   lo_contained and hi_contained,
                                   [float(w.real.min()), float(w0[0]),
                                    float(w0[-1]), float(w.real.max())]))

    spectra_rows = [[k + 1, float(w0[k]), float(w[k].real), float(w[k].imag)]
                    for k in range(spec.n)]
    _, v0 = np.linalg.eigh(h0)
    mode_rows = []
    order = np.argsort(w.real)
    for site in range(spec.n):
        row = [site + 1]
        row += [float(abs(v0[site, q])) for q in range(3)]
        row += [float(abs(es.right(order[q])[site])) for q in range(3)]
        mode_rows.append(row)

    report = {
        "lattice": spec.to_dict(),
        "omega_tilde": float(omega_tilde),
        "h0_range": [float(w0[0]), float(w0[-1])],
        "h_range": [float(w.real.min()), float(w.real.max())],
        "max_imag": float(np.abs(w.imag).max()),
    }
    tables = {
        "fig1_spectra": (["index", "omega0", "omega_re", "omega_im"], spectra_rows),
        "fig1_levels": (["q", "energy", "continuum", "deviation_over_omega_tilde"],
                        level_rows),
        "fig1_modes": (["site", "h0_mode1_abs", "h0_mode2_abs", "h0_mode3_abs",
                        "h_mode1_abs", "h_mode2_abs", "h_mode3_abs"], mode_rows),
    }
    return ScenarioResult("fig1", assertions, tables, report)


def scenario_fig2(cfg: ScenarioConfig, tol: Tolerances,
                  calibration: dict) -> ScenarioResult:
    """Selective vs standard skin effect at the calibrated ratio."""
    s = calibration["s"]
    n, t = cfg.n, 1.0
    spec = LatticeSpec(n=n, t=t, scaling="geometric", s=s)
    h0 = build_h0(spec)
    h, hpp = _product_pair(n, s, t, tol)
    es_h = eig_full(h, tol)
    es_hpp = eig_full(hpp, tol)
    es_h0 = eig_full(h0, tol)

    anchor_h = smallest_nonzero_abs(h, tol) / t
    anchor_hpp = smallest_nonzero_abs(hpp, tol) / t
    selective = verify_selective_skin(es_h, es_h0, s, tol)
    standard = verify_standard_skin(es_hpp, es_h0, s, tol)
    eq_resid = zero_mode_equality(es_h, es_hpp, tol)

    assertions = [
        _assert_le("fig2.gauge_anchor", abs(anchor_hpp - ANCHOR_GAUGE), 1e-3),
        _assert_le("fig2.product_anchor", abs(anchor_h - cfg.anchor), 1e-2),
        _assert_le("fig2.zero_mode_equality", eq_resid, tol.zero_mode_rel),
        _assert_le("fig2.zero_mode_envelope", selective.envelope_residual,
                   tol.zero_mode_rel),
        _assert_le("fig2.left_zero_extended", selective.left_zero_residual,
                   tol.zero_mode_rel),
        _assert_true("fig2.nonzero_modes_bulk",
                     all(r.classification == "bulk"
                         for r in selective.classifications
                         if r.mode_index != selective.zero_mode_index),
                     [r.classification for r in selective.classifications]),
        _assert_true("fig2.all_gauge_modes_skin_left",
                     all(r.classification == "skin_left"
                         for r in standard.classifications),
                     [r.classification for r in standard.classifications]),
        _assert_le("fig2.standard_envelopes", max(standard.envelope_residuals),
                   tol.zero_mode_rel),
        _assert_true("fig2.spectral_repulsion", anchor_h > anchor_hpp,
                     [anchor_h, anchor_hpp]),
    ]

    def profile_rows(es):
        rows = []
        for mu in range(es.dim):
            v = es.right(mu)
            v = v / np.abs(v).max()
            for site in range(es.dim):
                rows.append([mu, site + 1, float(v[site].real), float(v[site].imag)])
        return rows

    tables = {
        "fig2_modes_product": (CSV_HEADER,
                               [r.csv_row() for r in selective.classifications]),
        "fig2_modes_gauge": (CSV_HEADER,
                             [r.csv_row() for r in standard.classifications]),
        "fig2_profiles_product": (["mode", "site", "psi_re", "psi_im"],
                                  profile_rows(es_h)),
        "fig2_profiles_gauge": (["mode", "site", "psi_re", "psi_im"],
                                profile_rows(es_hpp)),
    }
    report = {
        "s": s,
        "product_anchor": anchor_h,
        "gauge_anchor": anchor_hpp,
        "zero_mode_equality_residual": eq_resid,
        "selective": selective.to_dict(),
        "standard": standard.to_dict(),
    }
    return ScenarioResult("fig2", assertions, tables, report)


def scenario_fig3(cfg: ScenarioConfig, tol: Tolerances,
                  calibration: dict) -> ScenarioResult:
    """Lasing thresholds under a single-site pump, and junction power flows."""
    s = calibration["s"]
    n, t = cfg.n, 1.0
    h, hpp = _product_pair(n, s, t, tol)
    assertions = []
    report: dict[str, Any] = {"s": s, "thresholds": {}}
    tables: dict[str, tuple[list[str], list[list]]] = {}

    flow_reports = {}
    for kappa_over_t, (d_sel, d_std) in THRESHOLD_TABLE.items():
        pump = cfg.pump or PumpSpec(kappa0=kappa_over_t * t, pumped_sites=(1,))
        pump = replace(pump, kappa0=kappa_over_t * t)
        results = {}
        for label, matrix, expect in (("selective", h, d_sel), ("standard", hpp, d_std)):
            res = find_threshold(matrix, pump, tol)
            ratio = res.threshold / pump.kappa0
            assertions.append(Assertion(
                name=f"fig3.threshold_{label}_kappa{kappa_over_t:g}",
                passed=bool(abs(ratio - expect) <= 0.01 * expect),
                measured=float(ratio), expected=f"{expect} +- 1%"))
            results[label] = res
        report["thresholds"][str(kappa_over_t)] = {
            lbl: results[lbl].to_dict() for lbl in results}
        if kappa_over_t == 0.02:
            flow_reports = {
                lbl: power_flows(results[lbl].threshold_mode,
                                 pumped_hamiltonian(mat, pump, results[lbl].threshold),
                                 pump, gamma=results[lbl].threshold)
                for lbl, mat in (("selective", h), ("standard", hpp))}
            traj_rows = []
            # the two searches used different grids; retrack on a shared one
            shared = np.linspace(0.0, max(results["selective"].threshold,
                                          results["standard"].threshold), 41)
            tr_sel = track_mode(h, pump, shared, tol)
            tr_std = track_mode(hpp, pump, shared, tol)
            if tr_sel.zero_mode_index is None or tr_std.zero_mode_index is None:
                raise RuntimeError("no frequency-pinned mode along the pump sweep")
            for k, g in enumerate(shared):
                row = [float(g)]
                for tr in (tr_sel, tr_std):
                    z = tr.eigenvalues[k, tr.zero_mode_index]
                    row += [float(z.real), float(z.imag)]
                traj_rows.append(row)
            tables["fig3_trajectories"] = (
                ["gamma", "selective_re", "selective_im",
                 "standard_re", "standard_im"], traj_rows)
            mode_rows = []
            for site in range(n):
                row = [site + 1]
                for lbl in ("selective", "standard"):
                    z = results[lbl].threshold_mode[site]
                    row += [float(z.real), float(z.imag)]
                mode_rows.append(row)
            tables["fig3_threshold_modes"] = (
                ["site", "selective_re", "selective_im",
                 "standard_re", "standard_im"], mode_rows)

    sel, std = flow_reports["selective"], flow_reports["standard"]
    assertions += [
        _assert_true("fig3.junction_loss_selective", bool((sel.junction_gains < 0).all()),
                     [float(g) for g in sel.junction_gains]),
        _assert_true("fig3.junction_loss_standard", bool((std.junction_gains < 0).all()),
                     [float(g) for g in std.junction_gains]),
        _assert_true("fig3.gain_contrast_5x",
                     bool(np.abs(std.junction_gains).max()
                          >= 5.0 * np.abs(sel.junction_gains).max()),
                     float(np.abs(std.junction_gains).max()
                           / np.abs(sel.junction_gains).max())),
        _assert_le("fig3.balance_selective",
                   sel.balance_residual, tol.balance_rel * sel.max_term),
        _assert_le("fig3.balance_standard",
                   std.balance_residual, tol.balance_rel * std.max_term),
    ]
    gains_rows = [[j + 1.5, float(sel.junction_gains[j]), float(std.junction_gains[j])]
                  for j in range(n - 1)]
    tables["fig3_junction_gains"] = (
        ["junction_center", "selective_gain", "standard_gain"], gains_rows)
    report["power_flows"] = {"selective": sel.to_dict(), "standard": std.to_dict()}
    return ScenarioResult("fig3", assertions, tables, report)


def scenario_fig4(cfg: ScenarioConfig, tol: Tolerances,
                  calibration: dict) -> ScenarioResult:
    """Zero-energy degeneracy structure for zeroed scaling entries."""
    s = calibration["s"]
    t = 1.0
    assertions = []
    report: dict[str, Any] = {"s": s, "cases": {}}

    def product_with_zeros(n, zeroed):
        spec = LatticeSpec(n=n, t=t, scaling="geometric", s=s,
                           zeroed_sites=tuple(zeroed))
        return construct_product(build_h0(spec), build_scaling(spec), tol)

    # zeroed interior even site: threefold zero, one 2-block plus one 1-block
    h = product_with_zeros(9, [4])
    rep = ep_analyze(h, 0.0, tol)
    report["cases"]["a4_zero_n9"] = rep.to_dict()
    assertions += [
        _assert_true("fig4.a4.algebraic_3", rep.algebraic_multiplicity == 3,
                     rep.algebraic_multiplicity),
        _assert_true("fig4.a4.geometric_2", rep.geometric_multiplicity == 2,
                     rep.geometric_multiplicity),
        _assert_true("fig4.a4.orders_2_1", rep.ep_orders == [2, 1], rep.ep_orders),
        _assert_le("fig4.a4.chain_residual", rep.chain_residuals, tol.zero_mode_rel),
    ]
    e4 = np.zeros(9)
    e4[3] = 1.0
    two_block = next(c for c, size in zip(rep.jordan_chains, rep.ep_orders) if size == 2)
    assertions.append(_assert_le(
        "fig4.a4.ep2_vector_is_e4",
        collinearity_residual(two_block[0], e4), tol.zero_mode_rel))
    # the analytic chain vector solves H J = t e4 up to kernel admixture
    j_vec = np.zeros(9)
    j_vec[0], j_vec[2] = -1.0, s ** -2
    assertions.append(_assert_le(
        "fig4.a4.analytic_chain_vector",
        collinearity_residual(h @ j_vec, e4), tol.zero_mode_rel))
    # the computed generalized vector lies in span{J} + ker(H)
    _, sv, vh = np.linalg.svd(h)
    kernel = vh[sv <= tol.nullity_rel * sv[0]].conj().T
    basis = np.column_stack([j_vec.astype(complex), kernel])
    coeffs, *_ = np.linalg.lstsq(basis, two_block[1], rcond=None)
    misfit = np.linalg.norm(basis @ coeffs - two_block[1])
    assertions.append(_assert_le("fig4.a4.generalized_vector_span",
                                 float(misfit / np.linalg.norm(two_block[1])),
                                 tol.zero_mode_rel))

    # zeroed first site, odd chain: simple zero, no EP
    h = product_with_zeros(9, [1])
    rep = ep_analyze(h, 0.0, tol)
    report["cases"]["a1_zero_n9"] = rep.to_dict()
    e1 = np.zeros(9)
    e1[0] = 1.0
    assertions += [
        _assert_true("fig4.a1n9.simple_zero",
                     rep.algebraic_multiplicity == 1
                     and rep.geometric_multiplicity == 1
                     and rep.ep_orders == [1],
                     [rep.algebraic_multiplicity, rep.geometric_multiplicity,
                      rep.ep_orders]),
        _assert_le("fig4.a1n9.vector_is_e1",
                   collinearity_residual(rep.jordan_chains[0][0], e1),
                   tol.zero_mode_rel),
    ]

    # zeroed first site, even chain: the zero becomes a second-order EP
    h = product_with_zeros(8, [1])
    rep = ep_analyze(h, 0.0, tol)
    report["cases"]["a1_zero_n8"] = rep.to_dict()
    e1 = np.zeros(8)
    e1[0] = 1.0
    assertions += [
        _assert_true("fig4.a1n8.ep2",
                     rep.algebraic_multiplicity == 2
                     and rep.geometric_multiplicity == 1
                     and rep.ep_orders == [2],
                     [rep.algebraic_multiplicity, rep.geometric_multiplicity,
                      rep.ep_orders]),
        _assert_le("fig4.a1n8.vector_is_e1",
                   collinearity_residual(rep.jordan_chains[0][0], e1),
                   tol.zero_mode_rel),
        _assert_le("fig4.a1n8.chain_residual", rep.chain_residuals, tol.zero_mode_rel),
    ]
    return ScenarioResult("fig4", assertions, {}, report)


def scenario_fig5(cfg: ScenarioConfig, tol: Tolerances,
                  calibration: dict) -> ScenarioResult:
    """First-order pump response of the zero mode vs exact threshold modes."""
    s = calibration["s"]
    n, t = cfg.n, 1.0
    pump = cfg.pump or PumpSpec(kappa0=0.02 * t, pumped_sites=(1,))
    kappa0 = pump.kappa0
    h, hpp = _product_pair(n, s, t, tol)

    assertions = []
    report: dict[str, Any] = {"s": s, "kappa0": kappa0, "systems": {}}
    overlay_cols: dict[str, list[float]] = {}

    for label, matrix in (("selective", h), ("standard", hpp)):
        hp = pumped_hamiltonian(matrix, pump, gamma=0.0)
        es = eig_full(hp, tol)
        zi = find_zero_mode_passive(es, tol)
        thr = find_threshold(matrix, pump, tol)
        d = thr.threshold

        hg = matrix_elements(es, pump.pumped_sites)
        # derivative of the tracked zero mode at gamma = 0, central difference
        h_fd = 1e-3 * kappa0
        tr = track_mode(matrix, pump, np.array([0.0, h_fd, 2 * h_fd]), tol)
        zmode = tr.zero_mode_index
        if zmode is None:
            raise RuntimeError("no frequency-pinned mode along the pump sweep")
        dwdg = (tr.eigenvalues[2, zmode] - tr.eigenvalues[0, zmode]) / (2 * h_fd)
        fd_gap = abs(dwdg - 1j * hg[zi, zi])
        assertions.append(_assert_le(f"fig5.{label}.dw_dgamma_match",
                                     fd_gap, 1e-6 * kappa0))

        resids = []
        gammas = [d / 4, d / 2, d]
        for g1 in gammas:
            pred = first_order(es, pump.pumped_sites, g1, zi, tol)
            odd_rel = (np.abs(pred.state_correction[0::2]).max()
                       / max(np.linalg.norm(pred.state_correction), 1e-300))
            if g1 == d:
                assertions.append(_assert_le(f"fig5.{label}.odd_site_correction",
                                             odd_rel, 1e-10))
            wa, va = np.linalg.eig(pumped_hamiltonian(matrix, pump, g1))
            exact = va[:, int(np.argmin(np.abs(wa.real)))]
            exact = exact / (es.left(zi) @ exact)
            predicted = es.right(zi) + pred.state_correction
            resids.append(float(np.linalg.norm(exact - predicted)))
            if g1 == d:
                exact_abs = np.abs(exact / exact[0])
                pred_abs = np.abs(predicted / predicted[0])
                overlay_cols[f"{label}_exact_abs"] = [float(x) for x in exact_abs]
                overlay_cols[f"{label}_predicted_abs"] = [float(x) for x in pred_abs]
        slope = np.polyfit(np.log(gammas), np.log(resids), 1)[0]
        assertions.append(Assertion(
            name=f"fig5.{label}.quadratic_residual_scaling",
            passed=bool(slope >= 1.7), measured=float(slope), expected=">= 1.7"))
        report["systems"][label] = {
            "threshold": d, "gammas": gammas, "residuals": resids,
            "scaling_exponent": float(slope),
            "energy_slope": [float(np.real(1j * hg[zi, zi])),
                             float(np.imag(1j * hg[zi, zi]))],
        }

    rows = [[site + 1] + [overlay_cols[c][site] for c in
                          ("selective_exact_abs", "selective_predicted_abs",
                           "standard_exact_abs", "standard_predicted_abs")]
            for site in range(n)]
    tables = {"fig5_overlay": (["site", "selective_exact_abs",
                                "selective_predicted_abs", "standard_exact_abs",
                                "standard_predicted_abs"], rows)}
    return ScenarioResult("fig5", assertions, tables, report)


def find_zero_mode_passive(es, tol: Tolerances):
    """Zero mode of a uniformly lossy chain: Re(w) pinned at zero."""
    idx = int(np.argmin(np.abs(es.eigenvalues.real)))
    if abs(es.eigenvalues[idx].real) > tol.zero_mode_rel * max(es.matrix_norm, 1e-300):
        raise ValueError("no frequency-pinned mode found")
    return idx


def scenario_oscillators(cfg: ScenarioConfig, tol: Tolerances) -> ScenarioResult:
    """Mass-spring realization: spectra, analytic 2-mass case, time-domain oracle."""
    assertions = []
    # analytic two-mass case
    chain2 = OscillatorChain(n=2, masses=(1.0, 2.0), spring_k=1.0)
    lam = np.sort(np.linalg.eigvals(dynamical_matrix(chain2)).real)
    target = np.sort([(-3 - np.sqrt(3)) / 2, (-3 + np.sqrt(3)) / 2])
    assertions.append(_assert_le("oscillators.two_mass_eigenvalues",
                                 float(np.abs(lam - target).max()), 1e-10))
    freqs2 = eigenfrequencies(dynamical_matrix(chain2), tol)
    assertions.append(_assert_le(
        "oscillators.two_mass_frequencies",
        float(np.abs(freqs2 - np.sqrt(-target[::-1])).max()), 1e-10))

    # seeded random chain: reality + integration oracle
    rng = np.random.default_rng(cfg.seed)
    n = 8
    chain = OscillatorChain(n=n, masses=tuple(rng.uniform(0.3, 4.0, n)), spring_k=1.0)
    m = dynamical_matrix(chain)
    freqs = eigenfrequencies(m, tol)
    lam_all = np.linalg.eigvals(m)
    assertions.append(_assert_le("oscillators.spectrum_imag",
                                 float(np.abs(lam_all.imag).max()),
                                 tol.mech_spectrum_rel * spectral_norm(m)))

    # single-mode purity and frequency
    lam_r, vecs = np.linalg.eig(m)
    mid = int(np.argsort(np.sqrt(-lam_r.real))[n // 2])
    x0 = np.real(vecs[:, mid])
    x0 = x0 / np.abs(x0).max()
    w_target = float(np.sqrt(-lam_r.real[mid]))
    dt = 0.05 / freqs.max()
    steps = int(np.ceil(100 * 2 * np.pi / w_target / dt))
    traj = integrate(chain, x0, np.zeros(n), dt, steps, tol)
    measured = spectral_peaks(traj.positions[:, int(np.argmax(np.abs(x0)))], dt,
                              rel_floor=0.5)
    freq_err = float(np.abs(measured - w_target).min() / w_target) if len(measured) \
        else 1.0
    assertions.append(_assert_le("oscillators.single_mode_frequency", freq_err, 1e-3))

    # energy conservation at a finer step
    dt_e = 0.002 / freqs.max()
    x0r = rng.uniform(-1, 1, n)
    v0r = rng.uniform(-1, 1, n)
    traj_e = integrate(chain, x0r, v0r, dt_e, 20000, tol)
    energies = np.array([total_energy(chain, traj_e.positions[k], traj_e.velocities[k])
                         for k in range(0, len(traj_e.times), 100)])
    drift = float((energies.max() - energies.min()) / energies.mean())
    assertions.append(_assert_le("oscillators.energy_conservation", drift, 1e-6))

    # multi-mode recovery: every strong spectral peak sits on an eigenfrequency
    traj_m = integrate(chain, x0r, np.zeros(n), dt, 1 << 15, tol)
    peaks = spectral_peaks(traj_m.positions[:, 0], dt, rel_floor=3e-2)
    resolution = 2 * np.pi / (len(traj_m.times) * dt)
    worst = max((float(np.abs(freqs - pk).min()) for pk in peaks), default=0.0)
    assertions.append(_assert_le("oscillators.fourier_peaks_on_spectrum", worst,
                                 max(1e-3 * freqs.max(), 2 * resolution)))

    rows = [[float(traj.times[k])] + [float(x) for x in traj.positions[k]]
            for k in range(0, len(traj.times), 50)]
    tables = {"oscillators_trajectory": (
        ["time"] + [f"x{i + 1}" for i in range(n)], rows)}
    report = {
        "two_mass_eigenvalues": [float(x) for x in lam],
        "chain_masses": list(chain.masses),
        "eigenfrequencies": [float(f) for f in freqs],
        "measured_frequency": float(measured[np.argmin(np.abs(measured - w_target))])
        if len(measured) else None,
        "energy_drift": drift,
    }
    return ScenarioResult("oscillators", assertions, tables, report)


def scenario_properties(cfg: ScenarioConfig, tol: Tolerances) -> ScenarioResult:
    suite = run_properties(cfg.trials, cfg.seed, tol)
    assertions = [
        _assert_true(f"properties.{name}", suite.passes.get(name, 0) == cfg.trials,
                     f"{suite.passes.get(name, 0)}/{cfg.trials}")
        for name in SUITE_NAMES
    ]
    return ScenarioResult("properties", assertions, {}, suite.to_dict())


def scenario_calibrate(cfg: ScenarioConfig, tol: Tolerances) -> ScenarioResult:
    record = calibrate_s(anchor=cfg.anchor, n=cfg.n, tol=tol)
    assertions = [
        _assert_le("calibrate.anchor_gap", abs(record["achieved"] - record["anchor"]),
                   1e-3),
        _assert_true("calibrate.thresholds_within_1pct",
                     all(c["within_1pct"] for c in record["threshold_checks"].values()),
                     record["threshold_checks"]),
    ]
    return ScenarioResult("calibrate_s", assertions, {}, record)


def scenario_custom(cfg: ScenarioConfig, tol: Tolerances) -> ScenarioResult:
    """User-supplied lattice: build, certify, and profile everything."""
    if cfg.lattice is None:
        raise ValueError("custom scenario requires a lattice spec")
    spec = cfg.lattice
    h0 = build_h0(spec)
    a = build_scaling(spec, allow_indefinite=True)
    h = construct_product(h0, a, tol)
    es = eig_full(h, tol)
    cert = certify(h, h0, es, tol)

    psd = bool(np.diagonal(a).real.min() >= 0)
    assertions = [
        _assert_le("custom.eigenpair_residuals", float(es.residuals.max()),
                   tol.residual_rel * es.matrix_norm),
    ]
    if psd:
        assertions.append(_assert_true("custom.spectrum_real", cert.is_real,
                                       cert.max_imag))
    else:
        assertions.append(_assert_le("custom.conjugation_closure",
                                     max(cert.pair_residuals),
                                     tol.reality_rel * es.matrix_norm))

    s_for_class = spec.s if spec.scaling == "geometric" else 1.0
    reports = mode_reports(es, s_for_class, tol)
    spectrum_rows = [[mu, float(es.eigenvalues[mu].real),
                      float(es.eigenvalues[mu].imag)] for mu in range(es.dim)]
    tables = {
        "custom_spectrum": (["index", "omega_re", "omega_im"], spectrum_rows),
        "custom_modes": (CSV_HEADER, [r.csv_row() for r in reports]),
    }
    report = {
        "lattice": spec.to_dict(),
        "certificate": cert.to_dict(),
        "eigensystem": es.to_dict(),
    }
    return ScenarioResult("custom", assertions, tables, report)


# ---------------------------------------------------------------------------
# dispatch and output writing

def _json_text(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run(cfg: ScenarioConfig) -> ScenarioResult:
    """Execute a scenario and write its outputs under cfg.out_dir."""
    tol = cfg.tol()
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if cfg.scenario == "fig1":
        result = scenario_fig1(cfg, tol)
    elif cfg.scenario == "fig2":
        result = scenario_fig2(cfg, tol, load_or_calibrate(out_dir, tol))
    elif cfg.scenario == "fig3":
        result = scenario_fig3(cfg, tol, load_or_calibrate(out_dir, tol))
    elif cfg.scenario == "fig4":
        result = scenario_fig4(cfg, tol, load_or_calibrate(out_dir, tol))
    elif cfg.scenario == "fig5":
        result = scenario_fig5(cfg, tol, load_or_calibrate(out_dir, tol))
    elif cfg.scenario == "oscillators":
        result = scenario_oscillators(cfg, tol)
    elif cfg.scenario == "properties":
        result = scenario_properties(cfg, tol)
    elif cfg.scenario == "calibrate_s":
        result = scenario_calibrate(cfg, tol)
        (out_dir / "calibration.json").write_text(_json_text(result.report))
        result.files.append(str(out_dir / "calibration.json"))
    else:
        result = scenario_custom(cfg, tol)

    payload = {
        "scenario": result.scenario,
        "assertions": [a.to_dict() for a in result.assertions],
        "passed": result.passed,
        "report": result.report,
    }
    if cfg.format == "csv":
        for name, (header, rows) in result.tables.items():
            path = out_dir / f"{name}.csv"
            path.write_text(_csv_text(header, rows))
            result.files.append(str(path))
    else:
        payload["tables"] = {name: {"header": header, "rows": rows}
                             for name, (header, rows) in result.tables.items()}
    report_path = out_dir / f"{result.scenario}_report.json"
    report_path.write_text(_json_text(payload))
    result.files.append(str(report_path))

    with (out_dir / "run.log").open("a") as log:
        log.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} scenario={result.scenario} "
                  f"passed={result.passed}\n")
    return result
