"""Gaussian-pointer (von Neumann) measurement schemes in closed form.

Two protocols are simulated analytically with an initial pure Gaussian
pointer of position standard deviation ``s``:

* the two-interaction work meter: couple H, evolve, counter-couple H_final,
  read the pointer once;
* the post-selected weak-value protocol: couple a single initial-energy
  projector, read the pointer, evolve, measure the final energy.

Sign convention: ``exp(i a P)`` translates the pointer by ``+a``, so the
meter's pointer lands at g (E_n - E'_m) and the readout axis is negated to
report w = E'_m - E_n; the conditional pointer wavefunction on that axis is
a superposition of Gaussians centred at g (E'_m - E_n).  All Gaussian
overlaps are exact, so the grid only renders densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooNarrow
from .linalg import dag, eig_hermitian
from .scenario import Scenario
from .schemes import margenau_hill, tpm

GRID_MIN_POINTS = 256
NORMALIZATION_TOL = 1e-6
_COVER_SIGMAS = 6.0


@dataclass(frozen=True)
class PointerConfig:
    """Coupling strength, initial pointer spread, and readout grid."""

    coupling: float
    spread: float
    x_min: float
    x_max: float
    n_points: int = 2048

    def __post_init__(self):
        if self.coupling <= 0 or self.spread <= 0:
            raise ValueError("coupling and spread must be positive")
        if self.n_points < GRID_MIN_POINTS:
            raise ValueError(f"n_points must be at least {GRID_MIN_POINTS}")
        if self.x_max <= self.x_min:
            raise ValueError("empty grid range")

    def grid(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @classmethod
    def for_scenario(cls, s: Scenario, coupling: float, spread: float,
                     points_per_sigma: float = 48.0, max_points: int = 2 ** 17
                     ) -> "PointerConfig":
        """Grid that covers every shifted centre by 6 spreads and resolves them."""
        e_i = eig_hermitian(s.h_initial).eigenvalues
        e_f = eig_hermitian(s.h_final).eigenvalues
        centers = coupling * (e_f[:, None] - e_i[None, :]).ravel()
        lo = float(centers.min() - _COVER_SIGMAS * spread)
        hi = float(centers.max() + _COVER_SIGMAS * spread)
        n = int(math.ceil((hi - lo) / spread * points_per_sigma)) + 1
        n = min(max(n, GRID_MIN_POINTS), max_points)
        return cls(coupling=coupling, spread=spread, x_min=lo, x_max=hi, n_points=n)


@dataclass(frozen=True, eq=False)
class PointerReadout:
    """Readout-position density on a grid, with the implied work density."""

    xs: np.ndarray
    density: np.ndarray
    coupling: float

    def work_axis(self) -> np.ndarray:
        return self.xs / self.coupling

    def work_density(self) -> np.ndarray:
        return self.density * self.coupling

    def normalization(self) -> float:
        return float(np.trapezoid(self.density, self.xs))

    def mean_work(self) -> float:
        return float(np.trapezoid(self.work_axis() * self.work_density(),
                                  self.work_axis()))

    def window_mass(self, center_w: float, half_width_w: float) -> float:
        """Integrated work-density mass in [center - hw, center + hw]."""
        w = self.work_axis()
        mask = (w >= center_w - half_width_w) & (w <= center_w + half_width_w)
        if mask.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.work_density()[mask], w[mask]))


def _pointer_amplitude_parts(s: Scenario):
    """Transition amplitudes t[m, n], state matrix r[n, n'], energies."""
    dec_i = eig_hermitian(s.h_initial)
    dec_f = eig_hermitian(s.h_final)
    u = s.unitary()
    t = dag(dec_f.eigenvectors) @ u @ dec_i.eigenvectors
    r = dag(dec_i.eigenvectors) @ s.rho @ dec_i.eigenvectors
    return t, r, dec_i.eigenvalues, dec_f.eigenvalues


def gaussian_meter(s: Scenario, cfg: PointerConfig) -> PointerReadout:
    """Two-interaction work-meter readout density.

    The readout density is a bilinear combination of Gaussians centred at
    g (E'_m - E_n) with single-interaction position noise ``spread``; branch
    coherences between (n, n') are damped by exp(-g^2 (E_n - E_n')^2 / 8 s^2).
    """
    g, spread = cfg.coupling, cfg.spread
    t, r, e_i, e_f = _pointer_amplitude_parts(s)
    centers = g * (e_f[:, None] - e_i[None, :])  # centers[m, n]
    lo, hi = centers.min(), centers.max()
    if lo - _COVER_SIGMAS * spread < cfg.x_min or hi + _COVER_SIGMAS * spread > cfg.x_max:
        raise GridTooNarrow(
            f"grid [{cfg.x_min}, {cfg.x_max}] must cover centres "
            f"[{lo:.6g}, {hi:.6g}] plus {_COVER_SIGMAS} spreads"
        )
    xs = cfg.grid()
    norm = (2.0 * math.pi * spread ** 2) ** -0.25
    # phi[m, n, x]: initial Gaussian amplitude shifted to each centre
    phi = norm * np.exp(-((xs[None, None, :] - centers[:, :, None]) ** 2)
                        / (4.0 * spread ** 2))
    b = np.einsum("mn,mo,no->mno", t, np.conj(t), r)
    density = np.einsum("mno,mnx,mox->x", b, phi, phi).real
    floor = float(density.min())
    if floor < -1e-12:
        raise GridTooNarrow(f"density dipped to {floor:.3e}; numerical inconsistency")
    density = np.clip(density, 0.0, None)
    readout = PointerReadout(xs=xs, density=density, coupling=g)
    if abs(readout.normalization() - 1.0) > NORMALIZATION_TOL:
        raise GridTooNarrow(
            f"grid resolves only {readout.normalization():.8f} of the density; "
            "widen the range or raise n_points"
        )
    return readout


def _gaussian_mixture_work_density(atoms, sigma_w: float, ws: np.ndarray) -> np.ndarray:
    out = np.zeros_like(ws)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma_w)
    for w0, p in atoms:
        out += p * norm * np.exp(-((ws - w0) ** 2) / (2.0 * sigma_w ** 2))
    return out


def smeared_distribution_density(dist, cfg: PointerConfig, ws: np.ndarray) -> np.ndarray:
    """Atom distribution convolved with the meter's Gaussian (sigma = s/g in work units)."""
    return _gaussian_mixture_work_density(dist.atoms, cfg.spread / cfg.coupling, ws)


def gaussian_meter_vs_fcs(s: Scenario, cfg: PointerConfig) -> float:
    """L1 distance between the meter work density and Gaussian * FCS quasi-probability."""
    from .schemes import fcs_quasiprob

    readout = gaussian_meter(s, cfg)
    ws = readout.work_axis()
    conv = smeared_distribution_density(fcs_quasiprob(s), cfg, ws)
    return float(np.trapezoid(np.abs(readout.work_density() - conv), ws))


def gaussian_meter_vs_tpm(s: Scenario, cfg: PointerConfig) -> float:
    """L1 distance between the meter work density and Gaussian * TPM distribution."""
    readout = gaussian_meter(s, cfg)
    ws = readout.work_axis()
    conv = smeared_distribution_density(tpm(s)[0], cfg, ws)
    return float(np.trapezoid(np.abs(readout.work_density() - conv), ws))


def weak_value_protocol(s: Scenario, k: int, cfg: PointerConfig) -> np.ndarray:
    """Post-selected pointer row p(E'_m) <X>_{|E'_m} / g for initial index ``k``.

    ``k`` indexes the eigenspaces of the initial Hamiltonian (ascending).  The
    pointer marginalization is exact: the row interpolates between the TPM
    joint row (strong coupling) and the Margenau-Hill row (weak coupling) with
    interference factor exp(-g^2 / 8 s^2).
    """
    g, spread = cfg.coupling, cfg.spread
    dec_i = eig_hermitian(s.h_initial)
    init = dec_i.projectors()
    if not 0 <= k < len(init):
        raise ValueError(f"k={k} outside the {len(init)} initial eigenspaces")
    _, p_k = init[k]
    comp = np.eye(s.dim) - p_k
    kappa = math.exp(-g ** 2 / (8.0 * spread ** 2))
    rho = s.rho
    effective = p_k @ rho @ p_k + 0.5 * kappa * (p_k @ rho @ comp + comp @ rho @ p_k)
    u = s.unitary()
    evolved = u @ effective @ dag(u)
    fin = eig_hermitian(s.h_final).projectors()
    return np.array([float(np.trace(q @ evolved).real) for _, q in fin])


def weak_value_table(s: Scenario, cfg: PointerConfig) -> np.ndarray:
    """All weak-value protocol rows stacked: shape (n_initial, n_final)."""
    n = len(eig_hermitian(s.h_initial).projectors())
    return np.vstack([weak_value_protocol(s, k, cfg) for k in range(n)])


def interpolation_sweep(s: Scenario, coupling: float, ratios):
    """L1 distances of the weak-value table to the TPM and MH joint tables.

    ``ratios`` are spread/coupling values, swept from strong (small) to weak
    (large) measurements.  Returns a list of (ratio, d_tpm, d_mh).
    """
    _, tpm_table = tpm(s)
    mh_table, _ = margenau_hill(s)
    out = []
    for ratio in ratios:
        cfg = PointerConfig.for_scenario(s, coupling=coupling, spread=coupling * ratio)
        rows = weak_value_table(s, cfg)
        d_tpm = float(np.abs(rows - tpm_table.weights).sum())
        d_mh = float(np.abs(rows - mh_table.weights).sum())
        out.append((float(ratio), d_tpm, d_mh))
    return out
