"""Canonical parameter sets and end-to-end reproduction of the five figures.

Each of the package's reference figures is reproducible as a set of CSV
tables plus an optional plot script.  The canonical parameters are pinned
here in one table; the dispersive operating point omega = 300 omega0,
kappa = 200 omega0 is shared by all figures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import correlations as corr
from . import meanfield as mfd
from . import modulation as mod
from .fluctuations import spectrum_sweep
from .params import DickeParams, PhysicalParams, density_profile, map_to_dicke

FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5")

#: shared dispersive operating point (frequencies in units of omega0)
BASE = dict(omega=300.0, omega0=1.0, kappa=200.0)

#: per-figure canonical settings
FIGURE_PARAMS = {
    # eigenfrequency sweep; lam_c/omega0 = 10.4083 at this operating point
    "fig1": dict(lam_over_lc=(0.0, 1.4), points=281,
                 zoom=(1.0 - 1e-5, 1.0 + 1e-5), zoom_points=201),
    # g2(tau) and its Fourier map below threshold, symmetric trap
    "fig2": dict(lam_values=np.linspace(0.5, 10.3, 25), atom_number=1e5,
                 long_time_lam=10.0),
    # beating of g2 for a displaced trap, bias lam' = lam/360
    "fig3": dict(lam_values=(2.0, 6.0, 8.0, 9.0, 10.0), bias_ratio=1.0 / 360.0,
                 atom_number=1e6),
    # modulation-spectroscopy response maps, depth eps = 1/50
    "fig4": dict(lam_over_lc=(0.5, 0.95), nu_over_omega0=(0.6, 2.2),
                 map_points=20, eps=1.0 / 50.0, atom_number=1e5,
                 cell=dict(lam_over_lc=0.8, nu=1.2)),
    # steady-state branches and displaced-trap density profiles at lam = 9
    "fig5": dict(lam_over_lc=(0.0, 2.0), points=160, atom_number=1e5,
                 density_lam=9.0),
}

#: reference geometry for the displaced-trap panels (lengths in units of the
#: pump wavelength, hbar = 1, so omega0 = 1): trap displacement tuned to
#: lam'/lam = +1/120 and pump strength to lam = 9 omega0.
CANONICAL_PHYSICAL = dict(
    pump_cavity_detuning=-200.0,
    dispersive_shift=0.4002241204401242,
    pump_coupling=0.8047249101911135,
    atom_number=100000,
    condensate_length=40.3,
    cavity_length=200.0,
    trap_displacement=0.11309116782829488,
    cavity_wavevector=2.0 * math.pi,
    atom_mass=2.0 * math.pi ** 2,
    kappa=200.0,
)


class MissingPhysicalParams(ValueError):
    """A figure panel requires the physical trap geometry."""


def base_params(atom_number: float = 1e5, lam: float = 0.0,
                lam_prime: float = 0.0) -> DickeParams:
    return DickeParams(lam=lam, lam_prime=lam_prime,
                       atom_number=atom_number, **BASE)


@dataclass
class Table:
    """One CSV artifact: a name, a header naming columns and units, rows."""

    name: str
    header: list[str]
    rows: list[list[float]]


def _downsample(arr: np.ndarray, step: int) -> np.ndarray:
    return arr[::step]


def figure1_tables() -> list[Table]:
    cfg = FIGURE_PARAMS["fig1"]
    p = base_params()
    lc = mfd.critical_coupling(p)
    header = ["lam[omega0]", "lam_over_lam_c[1]",
              "re_omega_1[omega0]", "im_omega_1[omega0]",
              "re_omega_2[omega0]", "im_omega_2[omega0]",
              "re_omega_3[omega0]", "im_omega_3[omega0]",
              "re_omega_4[omega0]", "im_omega_4[omega0]",
              "polariton_branch[index]"]
    tables = []
    for name, (lo, hi), npts in (
            ("fig1_spectrum", cfg["lam_over_lc"], cfg["points"]),
            ("fig1_spectrum_zoom", cfg["zoom"], cfg["zoom_points"])):
        grid = np.linspace(lo, hi, npts) * lc
        sw = spectrum_sweep(p, grid)
        rows = []
        for i, lam in enumerate(grid):
            row = [lam, lam / lc]
            for b in range(4):
                row += [sw.frequencies[i, b].real, sw.frequencies[i, b].imag]
            row.append(float(sw.polariton_index))
            rows.append(row)
        tables.append(Table(name, header, rows))
    return tables


def figure2_tables() -> list[Table]:
    cfg = FIGURE_PARAMS["fig2"]
    n_atoms = cfg["atom_number"]
    g2_rows, fft_rows = [], []
    for lam in cfg["lam_values"]:
        p = base_params(n_atoms, lam=float(lam))
        tau = corr.default_tau_grid(p)
        series = corr.two_time_correlations(p, tau)
        for t, g in zip(_downsample(tau, 16), _downsample(series.g2, 16)):
            g2_rows.append([lam, t, g])
        spec = corr.g2_spectrum(series)
        keep = spec.nu <= 3.0 * p.omega0
        for nu, lg in zip(spec.nu[keep], spec.log_magnitude[keep]):
            fft_rows.append([lam, nu, lg])
    p = base_params(n_atoms, lam=cfg["long_time_lam"])
    tau = corr.default_tau_grid(p)
    series = corr.two_time_correlations(p, tau)
    long_rows = [[t, g] for t, g in
                 zip(_downsample(tau, 4), _downsample(series.g2, 4))]
    return [
        Table("fig2a_g2_tau", ["lam[omega0]", "tau[1/omega0]", "g2[1]"], g2_rows),
        Table("fig2b_g2_fft", ["lam[omega0]", "nu[omega0]", "log10_abs_fft[1]"],
              fft_rows),
        Table("fig2c_g2_longtime", ["tau[1/omega0]", "g2[1]"], long_rows),
    ]


def figure3_tables() -> list[Table]:
    cfg = FIGURE_PARAMS["fig3"]
    rows = []
    for lam in cfg["lam_values"]:
        for bias in (cfg["bias_ratio"] * lam, 0.0):
            p = base_params(cfg["atom_number"], lam=lam, lam_prime=bias)
            tau = corr.default_tau_grid(p)
            series = corr.two_time_correlations(p, tau)
            for t, g in zip(_downsample(tau, 8), _downsample(series.g2, 8)):
                rows.append([lam, bias, t, g])
    return [Table("fig3_g2_beating",
                  ["lam[omega0]", "lam_prime[omega0]", "tau[1/omega0]", "g2[1]"],
                  rows)]


def figure4_tables(workers: int = 1) -> list[Table]:
    cfg = FIGURE_PARAMS["fig4"]
    p = base_params(cfg["atom_number"])
    lc = mfd.critical_coupling(p)
    n = cfg["map_points"]
    lam_grid = np.linspace(*cfg["lam_over_lc"], n) * lc
    nu_grid = np.linspace(*cfg["nu_over_omega0"], n) * p.omega0
    rmap = mod.driven_response_map(p, lam_grid, nu_grid, eps=cfg["eps"],
                                   workers=workers)
    map_rows = []
    for i, lam in enumerate(lam_grid):
        for j, nu in enumerate(nu_grid):
            map_rows.append([lam / lc, nu / p.omega0,
                             rmap.max_alpha2[i, j], rmap.max_re_beta[i, j],
                             float(rmap.stabilized[i, j])])
    cell = cfg["cell"]
    traj = mod.driven_trajectory(p, cell["lam_over_lc"] * lc, cell["nu"],
                                 eps=cfg["eps"])
    cell_rows = [[t, s.beta.real, abs(s.alpha) ** 2]
                 for t, s in zip(traj.t, traj.states)]
    return [
        Table("fig4ab_response_map",
              ["lam_over_lam_c[1]", "nu_over_omega0[1]", "max_alpha2_over_N[1]",
               "max_rebeta_over_N[1]", "stabilized_flag[bool]"], map_rows),
        Table("fig4c_timeseries",
              ["t[1/omega0]", "re_beta_over_N[1]", "alpha2_over_N[1]"], cell_rows),
    ]


def _branch_rows(branch: mfd.SteadyStateBranch, lc: float) -> list[list[float]]:
    rows = []
    for lam, entries in zip(branch.lam_grid, branch.states):
        for st, flag in entries:
            rows.append([lam, lam / lc, st.alpha.real, st.alpha.imag,
                         st.beta.real, st.beta.imag, st.w,
                         1.0 if flag == "stable" else 0.0])
    return rows


BRANCH_HEADER = ["lam[omega0]", "lam_over_lam_c[1]", "re_alpha[1]", "im_alpha[1]",
                 "re_beta[1]", "im_beta[1]", "w[1]", "stable[bool]"]


def figure5_tables(physical: PhysicalParams | None = None) -> list[Table]:
    cfg = FIGURE_PARAMS["fig5"]
    p = base_params(cfg["atom_number"])
    lc = mfd.critical_coupling(p)
    grid = np.linspace(*cfg["lam_over_lc"], cfg["points"]) * lc
    tables = [Table("fig5a_branches", BRANCH_HEADER,
                    _branch_rows(mfd.steady_states(p, grid), lc))]
    if physical is None:
        return tables

    lam_density = cfg["density_lam"]
    mirrored = PhysicalParams(**{
        **{k: getattr(physical, k) for k in (
            "pump_cavity_detuning", "dispersive_shift", "pump_coupling",
            "atom_number", "condensate_length", "cavity_length",
            "cavity_wavevector", "atom_mass", "kappa", "hbar",
            "max_displacement_fraction")},
        "trap_displacement": -physical.trap_displacement})
    # density panel: one fixed trap, the two signs of the bias field select
    # the two organized configurations (patterns shifted by half a pump
    # wavelength); the branch panels below use the displaced geometries
    dk = map_to_dicke(physical)
    ratio = abs(dk.lam_prime / dk.lam)
    grid_x = np.linspace(*physical.support, 2001)
    density_rows = [[float(x)] for x in grid_x]
    for sign in (+1.0, -1.0):
        q = DickeParams(dk.omega, dk.omega0, lam_density,
                        sign * ratio * lam_density, dk.kappa, dk.atom_number)
        seed = mfd.MeanFieldState(
            -1j * q.lam_prime * math.sqrt(q.atom_number) / (q.kappa + 1j * q.omega),
            0j, -q.atom_number / 2.0)
        ss = mfd.newton_steady_state(q, seed)
        dens = density_profile(physical, ss, grid_x)
        for row, value in zip(density_rows, dens):
            row.append(float(value))
    for tag, phys in (("plus", physical), ("minus", mirrored)):
        dk = map_to_dicke(phys)
        ratio = dk.lam_prime / dk.lam
        branch = mfd.steady_states(dk, grid[grid > 0], lam_prime_over_lam=ratio)
        tables.append(Table(f"fig5{'c' if tag == 'plus' else 'd'}_branches_{tag}",
                            BRANCH_HEADER, _branch_rows(branch, lc)))
    tables.insert(1, Table(
        "fig5b_density",
        ["x[pump_wavelength]", "density_plus[atoms_per_length]",
         "density_minus[atoms_per_length]"], density_rows))
    return tables


def reproduce_figure(fig_id: str, physical: PhysicalParams | None = None,
                     workers: int = 1) -> list[Table]:
    """All data tables of the named figure at canonical parameters.

    fig5's displaced-trap panels (b)-(d) need the physical trap geometry;
    without it only panel (a) is produced and a MissingPhysicalParams error
    is raised to make the omission explicit.
    """
    if fig_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {fig_id!r}; pick one of {FIGURE_IDS}")
    if fig_id == "fig1":
        return figure1_tables()
    if fig_id == "fig2":
        return figure2_tables()
    if fig_id == "fig3":
        return figure3_tables()
    if fig_id == "fig4":
        return figure4_tables(workers=workers)
    if physical is None:
        raise MissingPhysicalParams(
            "fig5 panels (b)-(d) need a [physical] parameter block "
            "(see configs/fig5_physical.ini for the canonical geometry)")
    return figure5_tables(physical)
