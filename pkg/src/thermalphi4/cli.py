"""Batch command-line interface.

Usage::

    thermalphi4 <command> [--preset NAME] [--config PATH] [--out PATH]
                [--format csv|json] [--threads N] [--print-config]

Configuration files are INI text with one section named after the command.
A preset is applied first and a config file overrides individual keys.
Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 physics-domain error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
import time
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import constants as _sc

from . import __version__
from ._parallel import pmap
from .constants import species
from .errors import ConfigError, NonConvergenceError, PhysicsDomainError, ThermalPhi4Error
from .gap import (critical_ratio_continuum, continuum_integral_quadrature, critical_ratio_lattice,
                  detect_crossings, physical_mass, solve_gap, trace_critical_line,
                  trace_mass_contour, FIT_MODELS)
from .io import (Param, ResultDocument, ResultTable, RunConfig, format_value, load_config,
                 write_csv, write_json)
from .ions import (IonChainSpec, classical_critical_kappa, coarse_grained_couplings,
                   exact_spin_couplings, lamb_dicke, matched_lamb_dicke, recoil_energy,
                   reduced_params, renormalized_couplings, solve_equilibrium, thermal_phase_map,
                   transverse_normal_modes)
from .lattice import LatticeSpec, reduce_to_dimensionless
from .loops import (MatsubaraTruncation, sunrise_k0_derivative, sunrise_kernel,
                    sunrise_mass_shift_truncated, tadpole_shift, tadpole_shift_infinite,
                    tadpole_shift_truncated)
from .special_fn import continuum_integral

__all__ = ["main", "run", "SCHEMAS", "PRESETS", "COMMANDS"]

TWO_PI = 2.0 * math.pi

# --------------------------------------------------------------------------- schemas

SCHEMAS: Dict[str, Dict[str, Param]] = {
    "critical-line": {
        "n_sites": Param("int", "count", 30),
        "temperatures_latt": Param("floats", "latt", "0.5, 1.0", "T a"),
        "mu2_grid_latt": Param("grid", "latt", "geom:1e-3:50:60", "mu^2 a^2"),
        "crossings": Param("bool", "flag", True),
    },
    "mass-contour": {
        "n_sites": Param("int", "count", 30),
        "lambda0_latt": Param("float", "latt", 1.0, "lambda0 a^2"),
        "temperatures_latt": Param("floats", "latt", "0.5, 1.0"),
        "mu2_start_latt": Param("float", "latt", 1.0),
        "step_factor": Param("float", "1", 0.1),
        "min_step_latt": Param("float", "latt", 1e-4),
        "matsubara_modes": Param("int", "count", 64),
        "max_steps": Param("int", "count", 100000),
    },
    "critical-ratio": {
        "n_sites": Param("int", "count", 2000),
        "mu2_grid_latt": Param("grid", "latt", "geom:1e-4:4e-3:20"),
        "temperature_latt": Param("float", "latt", 0.0),
        "fit_models": Param("strs", "label", ", ".join(FIT_MODELS), choices=tuple(FIT_MODELS)),
        "sweep_sites": Param("ints", "count", "250, 500, 1000"),
        "quadrature": Param("bool", "flag", True),
    },
    "ion-couplings": {
        "species": Param("str", "label", "Ca40"),
        "n_ions": Param("int", "count", 30),
        "axial_freq_hz": Param("float", "hz", 127e3),
        "transverse_freq_y_hz": Param("float", "hz", 2.93e6),
        "transverse_freq_z_hz": Param("float", "hz", 2.89e6),
        "detuning_hz": Param("float", "hz", 2.43e6),
        "rabi_hz": Param("float", "hz", 1e6),
        "qubit_freq_hz": Param("float", "hz", 411.5e12, "sets dk = 2 pi f / c"),
        "lamb_dicke_mode": Param("str", "label", "standard", choices=("standard", "matched")),
        "temperature_tbar": Param("float", "1", None, "enables renormalized couplings"),
        "matsubara_modes": Param("int", "count", 64),
    },
    "phase-map": {
        "species": Param("str", "label", "Ca40"),
        "n_ions": Param("int", "count", 30),
        "axial_freq_hz": Param("float", "hz", 0.45e6),
        "transverse_freq_y_hz": Param("float", "hz", None, "defaults to the largest omega_z"),
        "transverse_freq_z_grid_hz": Param("grid", "hz", "lin:5.5e6:6.5e6:11"),
        "tbar_grid": Param("grid", "1", "lin:2:40:20"),
        "detuning_hz": Param("float", "hz", 0.318e6),
        "matsubara_modes": Param("int", "count", 64),
    },
    "convergence": {
        "study": Param("str", "label", "matsubara",
                       choices=("temperature", "matsubara", "wavefunction")),
        "n_sites": Param("int", "count", 30),
        "mu2_latt": Param("float", "latt", 1.0),
        "temperatures_latt": Param("grid", "latt", "0.1, 0.5, 1.0, 2.0"),
        "matsubara_modes": Param("ints", "count", "1, 2, 4, 8, 16, 32, 64, 128"),
    },
}

PRESETS: Dict[str, Tuple[str, Dict[str, object]]] = {
    "fig2": ("ion-couplings", {
        "species": "Ca40", "n_ions": 30, "axial_freq_hz": 127e3,
        "transverse_freq_y_hz": 2.93e6, "transverse_freq_z_hz": 2.89e6,
        "detuning_hz": 2.43e6, "rabi_hz": 1e6, "qubit_freq_hz": 411.5e12,
        "lamb_dicke_mode": "standard"}),
    "fig3": ("convergence", {
        "study": "temperature", "n_sites": 30, "mu2_latt": 1.0,
        "temperatures_latt": "lin:0.05:2:40"}),
    "fig4": ("critical-ratio", {
        "n_sites": 2000, "mu2_grid_latt": "geom:1e-4:4e-3:20", "temperature_latt": 0.0,
        "sweep_sites": "250, 500, 1000"}),
    "fig5": ("critical-line", {
        "n_sites": 30, "temperatures_latt": "0.5, 1.0", "mu2_grid_latt": "geom:1e-3:50:60"}),
    "fig6": ("phase-map", {
        "species": "Ca40", "n_ions": 30, "axial_freq_hz": 0.45e6,
        "transverse_freq_z_grid_hz": "lin:5.5e6:6.5e6:11", "tbar_grid": "lin:2:40:20",
        "detuning_hz": 0.318e6, "matsubara_modes": 64}),
    "fig8": ("convergence", {
        "study": "matsubara", "n_sites": 30, "mu2_latt": 1.0,
        "temperatures_latt": "0.1, 0.5, 1.0, 2.0",
        "matsubara_modes": "1, 2, 4, 8, 16, 32, 64, 128, 256"}),
    "fig9": ("convergence", {
        "study": "wavefunction", "n_sites": 30, "mu2_latt": 1.0,
        "temperatures_latt": "0.1, 0.5, 1.0, 2.0",
        "matsubara_modes": "1, 2, 4, 8, 16, 32, 64, 128"}),
}


# --------------------------------------------------------------------------- commands

def cmd_critical_line(cfg: RunConfig, threads: int = 1):
    """Critical lines, one block of rows per temperature, plus pairwise crossings."""
    spec = LatticeSpec.nearest_neighbor(cfg["n_sites"])
    temps = cfg["temperatures_latt"]
    if not temps:
        raise ConfigError("temperatures_latt is empty")
    lines = [trace_critical_line(T, cfg["mu2_grid_latt"], spec, threads) for T in temps]
    tab = ResultTable("critical_line", ("T_latt", "mu2_latt", "lambda0_latt", "m02_latt"))
    for line in lines:
        for p in line.points:
            tab.append(line.T, p.mu_sq, p.lambda0, p.m0_sq)
    tables = [tab]
    if cfg["crossings"]:
        cx = ResultTable("crossings", ("plane_str", "T1_latt", "T2_latt", "abscissa_latt",
                                       "lambda0_latt"))
        for a, b in zip(lines, lines[1:]):
            for plane in ("m0", "mu"):
                for c in detect_crossings(a, b, plane).crossings:
                    cx.append(plane, a.T, b.T, c.abscissa, c.lambda0)
        tables.append(cx)
    return tables, f"n_sites={spec.n_sites}; matsubara=closed-form"


def cmd_mass_contour(cfg: RunConfig, threads: int = 1):
    """Physical-mass contour rows and the ``m_P**2 = 0`` boundary per temperature."""
    spec = LatticeSpec.nearest_neighbor(cfg["n_sites"])
    trunc = MatsubaraTruncation(cfg["matsubara_modes"])
    mc = trace_mass_contour(cfg["lambda0_latt"], cfg["temperatures_latt"], cfg["mu2_start_latt"],
                            spec, c=cfg["step_factor"], min_step=cfg["min_step_latt"], trunc=trunc,
                            max_steps=cfg["max_steps"], threads=threads)
    cols = ("T_latt", "m02_latt", "mu2_latt", "mp2_latt", "z_1")
    rows = ResultTable("contour", cols)
    for r in mc.rows:
        rows.append(r.T, r.m0_sq, r.mu_sq, r.mp_sq, r.z)
    bnd = ResultTable("boundary", cols)
    for r in mc.boundary:
        bnd.append(r.T, r.m0_sq, r.mu_sq, r.mp_sq, r.z)
    return [rows, bnd], (f"n_sites={spec.n_sites}; matsubara=closed-form; "
                         f"wavefunction_modes={trunc.n_modes}")


def cmd_critical_ratio(cfg: RunConfig, threads: int = 1):
    """Lattice critical ratio with fits, a size sweep and the continuum value."""
    models = cfg["fit_models"]
    T = cfg["temperature_latt"]
    main = critical_ratio_lattice(cfg["n_sites"], cfg["mu2_grid_latt"], models, T=T,
                                  threads=threads)
    pts = ResultTable("points", ("n_sites_1", "mu2_latt", "lambda0_latt", "ratio_1")
                      + tuple(f"resid_{m.replace('+', '_')}_1" for m in models))
    resid = [main.fit(m).residuals for m in models]
    for k, (x, f) in enumerate(zip(main.x, main.f)):
        pts.append(main.n_sites, x / f, x, f, *(r[k] for r in resid))
    fits = ResultTable("fits", ("n_sites_1", "model_str", "fc_1", "fc_err_1", "rms_resid_1",
                                "condition_1"))
    sizes = sorted(set(cfg["sweep_sites"]) - {cfg["n_sites"]})
    results = [critical_ratio_lattice(n, cfg["mu2_grid_latt"], models, T=T, threads=threads)
               for n in sizes] + [main]
    for res in results:
        for ft in res.fits:
            rms = math.sqrt(sum(r * r for r in ft.residuals) / len(ft.residuals))
            fits.append(res.n_sites, ft.model, ft.f_c, ft.f_c_err, rms, ft.condition)
    cont = ResultTable("continuum", ("fc_1", "integral_closed_1", "integral_quad_1",
                                     "integral_rel_dev_1"))
    i_closed = continuum_integral()
    if cfg["quadrature"]:
        i_quad = continuum_integral_quadrature()
        dev = abs(i_quad / i_closed - 1.0)
    else:
        i_quad = dev = math.nan
    cont.append(critical_ratio_continuum(), i_closed, i_quad, dev)
    return [pts, fits, cont], (f"n_sites={cfg['n_sites']}; sweep={sizes}; "
                               f"matsubara=closed-form")


def _ion_spec(cfg, wz, wy=None):
    sp = species(cfg["species"])
    wx = TWO_PI * cfg["axial_freq_hz"]
    wy = TWO_PI * (wy if wy is not None else cfg["transverse_freq_y_hz"])
    return IonChainSpec(cfg["n_ions"], sp.mass, wx, wy, TWO_PI * wz, sp.charge)


def cmd_ion_couplings(cfg: RunConfig, threads: int = 1):
    """Crystal, transverse modes and exact / coarse-grained (/ renormalized) couplings."""
    spec = _ion_spec(cfg, cfg["transverse_freq_z_hz"])
    eq = solve_equilibrium(spec)
    modes = transverse_normal_modes(eq, spec)
    dk = TWO_PI * cfg["qubit_freq_hz"] / _sc.c
    er = recoil_energy(dk, spec.mass)
    rabi = TWO_PI * cfg["rabi_hz"]
    det = TWO_PI * cfg["detuning_hz"]
    if cfg["lamb_dicke_mode"] == "matched":
        ld = matched_lamb_dicke(er, spec.axial_freq)
    else:
        ld = lamb_dicke(dk, spec.mass, spec.axial_freq)
    exact = exact_spin_couplings(modes, rabi, det, er).hertz()
    coarse = coarse_grained_couplings(eq, spec, det, rabi, ld).hertz()
    renorm = None
    tbar = cfg["temperature_tbar"]
    trunc = MatsubaraTruncation(cfg["matsubara_modes"])
    if tbar is not None:
        p, d = reduced_params(eq, spec)
        dc = reduce_to_dimensionless(p, 0.0, spec.mass, d)
        lspec = LatticeSpec.trapped_ion(p)
        gs = solve_gap(dc.mbar0_sq, dc.lambdabar0, tbar, lspec)
        mp = physical_mass(gs.mu_sq, dc.lambdabar0, tbar, lspec, trunc)
        renorm = renormalized_couplings(eq, spec, det, rabi, ld, mp).hertz()

    pos = ResultTable("positions", ("ion_1", "x_over_l_1"))
    for i, u in enumerate(eq.positions):
        pos.append(i + 1, u)
    md = ResultTable("modes", ("mode_1", "freq_hz"))
    for k, w in enumerate(modes.frequencies):
        md.append(k + 1, w / TWO_PI)
    cols = ("i_1", "j_1", "sep_1", "exact_hz", "coarse_hz", "rel_dev_1")
    if renorm is not None:
        cols += ("renormalized_hz",)
    cp = ResultTable("couplings", cols)
    n = spec.n_ions
    dev = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            rel = abs(coarse[i, j] - exact[i, j]) / abs(exact[i, j])
            dev.setdefault(abs(i - j), []).append(rel)
            row = [i + 1, j + 1, abs(i - j), exact[i, j], coarse[i, j], rel]
            if renorm is not None:
                row.append(renorm[i, j])
            cp.append(*row)
    near = [v for s in (1, 2) for v in dev.get(s, [])]
    far = [v for s, vs in dev.items() if s >= 5 for v in vs]
    summ = ResultTable("summary", ("bulk_spacing_m", "length_ratio_1", "zigzag_freq_hz",
                                   "classical_wzc_hz", "center_nn_exact_hz", "center_nn_coarse_hz",
                                   "near_mean_dev_1", "far_mean_dev_1"))
    c = n // 2 - 1
    try:
        kc = classical_critical_kappa(n, eq.bulk_spacing)
        wzc = spec.axial_freq / math.sqrt(kc) / TWO_PI
    except PhysicsDomainError:
        wzc = math.nan
    summ.append(eq.bulk_spacing * spec.length_scale, eq.length_ratio,
                modes.frequencies[-1] / TWO_PI, wzc, exact[c, c + 1], coarse[c, c + 1],
                float(np.mean(near)) if near else math.nan,
                float(np.mean(far)) if far else math.nan)
    trunc_s = f"n_ions={n}"
    if tbar is not None:
        trunc_s += f"; matsubara=closed-form; wavefunction_modes={trunc.n_modes}"
    return [pos, md, cp, summ], trunc_s


def cmd_phase_map(cfg: RunConfig, threads: int = 1):
    """Renormalized Compton wavelength over ``(omega_z, Tbar)`` and the critical curve."""
    wz = cfg["transverse_freq_z_grid_hz"]
    if not wz:
        raise ConfigError("transverse_freq_z_grid_hz is empty")
    wy = cfg["transverse_freq_y_hz"] if cfg["transverse_freq_y_hz"] is not None else max(wz)
    spec = _ion_spec(cfg, wz[0], wy)
    trunc = MatsubaraTruncation(cfg["matsubara_modes"])
    grid = thermal_phase_map(spec, [TWO_PI * w for w in wz], cfg["tbar_grid"],
                             TWO_PI * cfg["detuning_hz"], trunc=trunc, threads=threads)
    cells = ResultTable("cells", ("omega_z_hz", "tbar_1", "xi_over_d_1", "nbar_1",
                                  "omega_zz_p_hz", "mp2_1", "z_1", "status_str"))
    for i, w in enumerate(wz):
        for j, t in enumerate(grid.tbar):
            cells.append(w, t, grid.xi_over_d[i, j], grid.nbar[i, j],
                         grid.omega_zz_p[i, j] / TWO_PI, grid.mp_sq[i, j], grid.z[i, j],
                         grid.status[i][j] or "ok")
    curve = ResultTable("critical_curve", ("tbar_1", "omega_zc_hz"))
    for w, t in grid.critical_curve:
        curve.append(t, w / TWO_PI)
    summ = ResultTable("summary", ("lambdabar0_1",))
    summ.append(grid.lambdabar0)
    return [cells, curve, summ], (f"n_ions={spec.n_ions}; matsubara=closed-form; "
                                  f"wavefunction_modes={trunc.n_modes}")


def _conv_temperature(cfg, spec, mu2):
    tab = ResultTable("temperature", ("T_latt", "tadpole_ratio_1", "tadpole_zero_T_inf_1",
                                      "sunrise_ratio_1", "sunrise_zero_T_continuum_1"))
    td_inf = tadpole_shift_infinite(mu2, 1.0)
    sr_cont = -continuum_integral() / (6.0 * (2 * math.pi) ** 4)
    for T in cfg["temperatures_latt"]:
        td = tadpole_shift(mu2, T, 1.0, spec).value
        sr = -mu2 * sunrise_kernel(mu2, T, spec) / 6.0
        tab.append(T, td, td_inf, sr, sr_cont)
    return tab


def _conv_matsubara(cfg, spec, mu2, threads):
    tab = ResultTable("matsubara", ("T_latt", "n_modes_1", "tadpole_trunc_1", "tadpole_closed_1",
                                    "sunrise_trunc_1", "sunrise_closed_1"))
    jobs = [(T, n) for T in cfg["temperatures_latt"] for n in cfg["matsubara_modes"]]

    def one(job):
        T, n = job
        tr = MatsubaraTruncation(n)
        return (tadpole_shift_truncated(mu2, T, 1.0, spec, tr).value,
                sunrise_mass_shift_truncated(mu2, T, 1.0, spec, tr).value)

    vals = pmap(one, jobs, threads)
    closed = {T: (tadpole_shift(mu2, T, 1.0, spec).value, -sunrise_kernel(mu2, T, spec) / 6.0)
              for T in cfg["temperatures_latt"]}
    for (T, n), (td, sr) in zip(jobs, vals):
        tab.append(T, n, td, closed[T][0], sr, closed[T][1])
    return tab


def _conv_wavefunction(cfg, spec, mu2, threads):
    tab = ResultTable("wavefunction", ("T_latt", "n_modes_1", "dsigma_dk0sq_ratio_1",
                                       "rel_change_1"))
    jobs = [(T, n) for T in cfg["temperatures_latt"] for n in cfg["matsubara_modes"]]
    vals = pmap(lambda j: sunrise_k0_derivative(mu2, j[0], 1.0, spec,
                                                MatsubaraTruncation(j[1])).value, jobs, threads)
    prev = {}
    for (T, n), v in zip(jobs, vals):
        p = prev.get(T)
        tab.append(T, n, v, abs(v / p - 1.0) if p else math.nan)
        prev[T] = v
    return tab


def cmd_convergence(cfg: RunConfig, threads: int = 1):
    """Temperature dependence and Matsubara truncation studies of the loop sums.

    All values are per unit coupling: ``Sigma_td / lambda0`` and
    ``Sigma_sr / lambda0**2`` (times ``mu**2`` in the temperature study).
    """
    spec = LatticeSpec.nearest_neighbor(cfg["n_sites"])
    mu2 = cfg["mu2_latt"]
    study = cfg["study"]
    if study == "temperature":
        return [_conv_temperature(cfg, spec, mu2)], f"n_sites={spec.n_sites}; matsubara=closed-form"
    if study == "matsubara":
        tab = _conv_matsubara(cfg, spec, mu2, threads)
    else:
        tab = _conv_wavefunction(cfg, spec, mu2, threads)
    return [tab], f"n_sites={spec.n_sites}; matsubara_modes={cfg['matsubara_modes']}"


COMMANDS: Dict[str, Callable] = {
    "critical-line": cmd_critical_line,
    "mass-contour": cmd_mass_contour,
    "critical-ratio": cmd_critical_ratio,
    "ion-couplings": cmd_ion_couplings,
    "phase-map": cmd_phase_map,
    "convergence": cmd_convergence,
}


# --------------------------------------------------------------------------- driver

def resolve_config(command: str, preset: Optional[str] = None,
                   text: Optional[str] = None) -> RunConfig:
    overrides = None
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        pcmd, overrides = PRESETS[preset]
        if pcmd != command:
            raise ConfigError(f"preset {preset!r} belongs to command {pcmd!r}")
    return load_config(command, SCHEMAS[command], text, overrides)


def config_to_ini(cfg: RunConfig) -> str:
    """INI text that resolves to the same configuration and digest."""
    out = [f"[{cfg.command}]"]
    for k, v in cfg.values.items():
        if v is None:
            continue
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, (list, tuple)):
            s = ", ".join(format_value(x) for x in v)
        else:
            s = format_value(v)
        out.append(f"{k} = {s}")
    return "\n".join(out) + "\n"


def run(command: str, cfg: RunConfig, threads: int = 1, preset: Optional[str] = None
        ) -> ResultDocument:
    """Execute a command and wrap its tables with run metadata."""
    started = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0)
    t0 = time.perf_counter()
    tables, trunc = COMMANDS[command](cfg, threads)
    elapsed = time.perf_counter() - t0
    meta = {
        "program": "thermalphi4",
        "version": __version__,
        "command": command,
        "preset": preset or "none",
        "config_digest": cfg.digest,
        "truncation": trunc,
        "threads": str(threads),
        "started_utc": started.isoformat(),
        "wall_clock_s": f"{elapsed:.3f}",
    }
    return ResultDocument(meta, tables)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermalphi4",
                                 description="Thermal lattice phi^4 and trapped-ion coupling tables.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="INI file with a section named after the command")
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--print-config", action="store_true",
                    help="print the resolved configuration as INI and exit")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        text = None
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        cfg = resolve_config(args.command, args.preset, text)
        if args.print_config:
            sys.stdout.write(config_to_ini(cfg))
            return 0
        doc = run(args.command, cfg, args.threads, args.preset)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 3
    except (PhysicsDomainError, ThermalPhi4Error) as exc:
        print(f"physics-domain error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 4
    writer = write_csv if args.format == "csv" else write_json
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            writer(doc, fh)
    else:
        writer(doc, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
