"""Command-line interface.

Every subcommand reads an optional scenario file and writes one CSV table
(to ``--out`` or standard output).  Exit status: 0 success, 1 invalid
input, 2 a fit that did not converge or was ambiguous.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from . import constants as C
from .cavity import (
    check_saturation,
    chiral_scattering_spectrum,
    effective_params,
    empty_cavity_spectrum,
    linewidth_broadening,
    mode_photon_numbers,
)
from .fitting import (
    FitError,
    SidebandFitConfig,
    fit_lorentzian_doublet,
    fit_separation,
    fit_sideband_spectrum,
    format_uncertainty,
)
from .fitting.models import SIDEBAND_PARAMS
from .geometry import Mode, bragg_scan, ideal_scaling, interference_period, thermal_bragg_scaling
from .multilevel import HELICITIES, LevelData, interference_contrast, multilevel_scaling, rayleigh_amplitudes
from .scenario import Scenario, ScenarioError, format_scenario, load_scenario
from .series import SpectrumSeries, add_noise
from .tables import DataTable, TableError, format_table, read_table, series_table, write_text_atomic
from .thermal import cavity_spectrum, cooling_limit, effective_cooperativity

DEFAULT_SEED = 20240617
EXIT_OK, EXIT_INVALID, EXIT_FIT = 0, 1, 2
HZ = "Hz"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; here 2 is reserved for fit failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("grid must be 'min,max,n'")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse grid {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi) or n < 2:
        raise argparse.ArgumentTypeError("grid needs finite min < max and n >= 2")
    return lo, hi, n


def _grid(args, default: tuple[float, float, int]) -> np.ndarray:
    lo, hi, n = args.grid or default
    return np.linspace(lo, hi, n)


def _noisy(args, series: SpectrumSeries, rng) -> SpectrumSeries:
    scaled = series.with_rate(series.rate * args.efficiency)
    if args.noise:
        return add_noise(scaled, args.noise, rng, args.noise_mode)
    return scaled


def _header(args, extra=()) -> list[str]:
    out = [f"cavitybragg {args.command}"]
    if getattr(args, "noise", 0):
        out.append(f"noise={args.noise!r} mode={args.noise_mode} seed={args.seed}")
    return out + list(extra)


# ---------------------------------------------------------------------------
# subcommands; each returns (table, exit_status)


def cmd_bragg_scan(args, sc: Scenario, rng):
    probe = sc.probe_geometry()
    d = sc.array.spacing_nm
    grid = args.grid or (d - 3000.0, d + 3000.0, 601)
    scans = bragg_scan(sc.atom_array(), probe, grid[0], grid[1], grid[2])
    cw = _noisy(args, scans[Mode.CW], rng)
    ccw = _noisy(args, scans[Mode.CCW], rng)
    notes = [f"n_atoms={sc.array.n_atoms} angle_deg={probe.incidence_angle_phi!r}",
             f"period_cw_nm={interference_period(probe, Mode.CW)!r} "
             f"period_ccw_nm={interference_period(probe, Mode.CCW)!r}"]
    return series_table("d_nm", "nm", {"rate_cw": cw, "rate_ccw": ccw}, "arb",
                        _header(args, notes)), EXIT_OK


def cmd_photon_numbers(args, sc: Scenario, rng):
    cav, drive = sc.cavity_params(), sc.drive_params()
    span = 5.0 * sc.cavity.kappa_2pi_hz
    delta_c = _grid(args, (-span, span, 401))
    n_cw, n_ccw = mode_photon_numbers(sc.atom_array(), sc.probe_geometry(), cav, drive,
                                      C.TWO_PI * delta_c)
    eff = effective_params(cav, drive)
    notes = [f"U_e_2pi_hz={eff.u_e / C.TWO_PI!r}",
             f"broadening_2pi_hz={linewidth_broadening(cav, drive) / C.TWO_PI!r}",
             f"saturation={check_saturation(cav, drive)!r}"]
    table = DataTable.from_columns({
        "delta_c_2pi_hz": (HZ, delta_c),
        "n_cw": ("photons", n_cw * args.efficiency),
        "n_ccw": ("photons", n_ccw * args.efficiency),
    }, _header(args, notes))
    return table, EXIT_OK


def cmd_spectrum(args, sc: Scenario, rng):
    grid = _grid(args, (-250e3, 250e3, 2001))
    modes = sc.thermal_modes()
    spec = cavity_spectrum(modes, sc.cavity_params(), 1.0, 0.0, C.TWO_PI * grid)
    spec = SpectrumSeries(grid, spec.rate, "rate", "probe_2pi_hz")
    notes = [f"{m.label}: trap_2pi_hz={m.trap_freq / C.TWO_PI!r} n_phonon={m.n_phonon!r} "
             f"lamb_dicke={m.lamb_dicke!r}" for m in modes]
    return series_table("probe_2pi_hz", HZ, {"rate": _noisy(args, spec, rng)}, "arb",
                        _header(args, notes)), EXIT_OK


def cmd_empty_cavity(args, sc: Scenario, rng):
    split = sc.cavity.chiral_split_2pi_hz
    half_span = max(split, 10.0 * sc.cavity.kappa_2pi_hz)
    grid = _grid(args, (-half_span, half_span, 4001))
    parts = empty_cavity_spectrum(sc.cavity_params(), C.TWO_PI * grid)
    # unit-area in angular frequency; rescale to peak height one for readability
    peak = 2.0 / (math.pi * sc.cavity_params().kappa)
    out = {name.replace("+", "_plus").replace("-", "_minus"):
           _noisy(args, SpectrumSeries(grid, s.rate / peak, name, "freq_2pi_hz"), rng)
           for name, s in parts.items()}
    return series_table("freq_2pi_hz", HZ, out, "arb", _header(args)), EXIT_OK


def cmd_chiral(args, sc: Scenario, rng):
    split = sc.cavity.chiral_split_2pi_hz
    half_span = max(split, 10.0 * sc.cavity.kappa_2pi_hz)
    grid = _grid(args, (-half_span, half_span, 4001))
    cw, ccw = chiral_scattering_spectrum(sc.zeeman_distribution(), sc.cavity_params(),
                                         C.TWO_PI * grid)
    out = {"rate_cw": _noisy(args, SpectrumSeries(grid, cw.rate, "cw", "freq_2pi_hz"), rng),
           "rate_ccw": _noisy(args, SpectrumSeries(grid, ccw.rate, "ccw", "freq_2pi_hz"), rng)}
    return series_table("freq_2pi_hz", HZ, out, "arb", _header(args)), EXIT_OK


def cmd_cooling_limit(args, sc: Scenario, rng):
    cav = sc.cavity_params()
    mode = sc.thermal_mode(args.mode)
    cool = sc.cooling
    eta = cool.eta_effective
    if eta is None:
        eta = effective_cooperativity(cav.eta_cooperativity, cool.multiplicity_factor,
                                      cool.polarization_factor)
    limit = cooling_limit(cav, mode.trap_freq, cool.d_factor, cool.c_factor, eta)
    table = DataTable.from_columns({
        "trap_2pi_hz": (HZ, [next(t.trap_2pi_hz for t in sc.thermal if t.label == args.mode)]),
        "eta_effective": ("1", [eta]),
        "n_limit": ("phonons", [limit.exact]),
        "n_limit_approx": ("phonons", [limit.approx]),
        "recoil_term": ("phonons", [limit.recoil_term]),
    }, _header(args, [f"n_limit={limit.exact:.4f} recoil_term={limit.recoil_term:.4f}"]))
    return table, EXIT_OK


def cmd_scaling(args, sc: Scenario, rng):
    n = np.arange(1, args.n_max + 1)
    ideal = [v for _, v in ideal_scaling(args.n_max, args.condition)]
    mode = sc.thermal_mode(args.mode)
    thermal = [v for _, v in thermal_bragg_scaling(args.n_max, mode.lamb_dicke, mode.n_phonon,
                                                   args.condition)]
    columns = {"n_atoms": ("atoms", n), "ideal": ("single_atom", ideal),
               "thermal": ("single_atom", thermal)}
    notes = [f"condition={args.condition} mode={mode.label} lamb_dicke={mode.lamb_dicke!r} "
             f"n_phonon={mode.n_phonon!r}"]
    if args.condition == "constructive":
        amps = rayleigh_amplitudes(LevelData(f_ground=sc.zeeman.f),
                                   C.TWO_PI * sc.probe.detuning_atom_2pi_hz)
        zeeman = sc.zeeman_distribution()
        multi = multilevel_scaling(zeeman, amps, args.helicity, args.n_max)
        contrast = interference_contrast(zeeman, amps, args.helicity)
        combined = thermal_bragg_scaling(args.n_max, mode.lamb_dicke, mode.n_phonon,
                                         args.condition, coherence=contrast)
        columns["multilevel"] = ("single_atom", [v for _, v in multi])
        # product of the two damping factors, a model choice rather than a derived result
        columns["combined"] = ("single_atom", [v for _, v in combined])
        notes.append(f"multilevel helicity={args.helicity:+d} contrast={float(contrast)!r}")
    return DataTable.from_columns(columns, _header(args, notes)), EXIT_OK


def cmd_contrast(args, sc: Scenario, rng):
    grid = _grid(args, (-1.5e9, 1.5e9, 601))
    levels = LevelData(f_ground=sc.zeeman.f)
    zeeman = sc.zeeman_distribution()
    cols = {q: [] for q in HELICITIES}
    for delta in grid:
        amps = rayleigh_amplitudes(levels, C.TWO_PI * delta)
        for q in HELICITIES:
            cols[q].append(interference_contrast(zeeman, amps, q))
    table = DataTable.from_columns({
        "detuning_2pi_hz": (HZ, grid),
        "contrast_sigma_plus": ("1", cols[+1]),
        "contrast_sigma_minus": ("1", cols[-1]),
    }, _header(args, ["detuning measured from the F'=5 level"]))
    return table, EXIT_OK


def _data(args) -> DataTable:
    if not args.data:
        raise UsageError(f"{args.command} needs --data <csv>")
    return read_table(args.data)


def _fit_table(values: dict[str, tuple[str, float, float]], args, notes, status) -> DataTable:
    columns = {}
    for name, (unit, value, err) in values.items():
        columns[name] = (unit, [value])
        columns[f"{name}_err"] = (unit, [err])
    return DataTable.from_columns(columns, _header(args, notes)), status


def cmd_fit_separation(args, sc: Scenario, rng):
    table = _data(args)
    cw = table.series("d_nm", "rate_cw")
    ccw = table.series("d_nm", "rate_ccw")
    try:
        fit = fit_separation(cw, ccw, sc.array.n_atoms, sc.probe.wavelength_nm,
                             inverse_variance=args.weighted)
    except FitError as exc:
        print(f"fit-separation: {exc}", file=sys.stderr)
        return None, EXIT_FIT
    e = fit.errors
    values = {
        "period_cw": ("nm", fit.period_cw, e["period_cw"]),
        "period_ccw": ("nm", fit.period_ccw, e["period_ccw"]),
        "phi": ("deg", fit.phi_deg, e["phi_deg"]),
        "d_scale": ("1", fit.d_scale, e["d_scale"]),
        "c0_cw": ("arb", fit.c0_cw, e["c0_cw"]), "c1_cw": ("arb", fit.c1_cw, e["c1_cw"]),
        "c0_ccw": ("arb", fit.c0_ccw, e["c0_ccw"]), "c1_ccw": ("arb", fit.c1_ccw, e["c1_ccw"]),
    }
    status = EXIT_OK if fit.result.converged else EXIT_FIT
    notes = [fit.summary(), f"converged={fit.result.converged} start={fit.result.start_index}"]
    print(fit.summary(), file=sys.stderr)
    return _fit_table(values, args, notes, status)


_SIDEBAND_UNITS = {"omega_c": HZ, "omega_axial": HZ, "omega_radial": HZ,
                   "n_axial": "phonons", "n_radial": "phonons", "rate_scale": "arb"}


def _parse_fixed(items: Sequence[str]) -> dict[str, float]:
    fixed = {}
    for item in items or ():
        name, _, value = item.partition("=")
        if name not in SIDEBAND_PARAMS:
            raise UsageError(f"--fix: unknown parameter {name!r}; have {', '.join(SIDEBAND_PARAMS)}")
        v = float(value)
        fixed[name] = C.TWO_PI * v if _SIDEBAND_UNITS[name] == HZ else v
    return fixed


def cmd_fit_spectrum(args, sc: Scenario, rng):
    table = _data(args)
    raw = table.series("probe_2pi_hz", args.column or "rate")
    spectrum = SpectrumSeries(C.TWO_PI * raw.freq, raw.rate, raw.channel, raw.axis_name,
                              raw.error)
    initial = {}
    for mode in sc.thermal_modes():
        if mode.label in ("axial", "radial"):
            initial[f"omega_{mode.label}"] = mode.trap_freq
            initial[f"n_{mode.label}"] = mode.n_phonon
    initial.pop("n_axial", None)  # the multi-start covers n_axial
    config = SidebandFitConfig(cav=sc.cavity_params(), initial=initial,
                               fixed=_parse_fixed(args.fix), include_radial=not args.no_radial,
                               inverse_variance=args.weighted)
    result = fit_sideband_spectrum(spectrum, config)
    values = {}
    for name in result.names:
        scale = C.TWO_PI if _SIDEBAND_UNITS[name] == HZ else 1.0
        values[name.replace("omega_", "freq_") + ("_2pi_hz" if scale != 1.0 else "")] = (
            _SIDEBAND_UNITS[name], result[name] / scale, result.error(name) / scale)
    notes = [
        " ".join(f"{k}={format_uncertainty(v, e)}" for k, (_, v, e) in values.items()),
        f"converged={result.converged} degenerate={result.degenerate} "
        f"at_bound={','.join(result.at_bound) or 'none'}",
        result.message,
    ]
    print(notes[0], file=sys.stderr)
    status = EXIT_OK if result.converged else EXIT_FIT
    return _fit_table(values, args, notes, status)


def cmd_fit_doublet(args, sc: Scenario, rng):
    table = _data(args)
    spectrum = table.series("freq_2pi_hz", args.column or "total")
    fit = fit_lorentzian_doublet(spectrum, inverse_variance=args.weighted)
    e = fit.errors
    values = {
        "center_1": (HZ, fit.centers[0], e["center_1"]),
        "center_2": (HZ, fit.centers[1], e["center_2"]),
        "width": (HZ, fit.width, e["width"]),
        "amp_1": ("arb", fit.amplitudes[0], e["amp_1"]),
        "amp_2": ("arb", fit.amplitudes[1], e["amp_2"]),
        "offset": ("arb", fit.offset, e["offset"]),
        "splitting": (HZ, fit.splitting, e["splitting"]),
    }
    notes = [f"splitting={format_uncertainty(fit.splitting, e['splitting'])} Hz "
             f"width={format_uncertainty(fit.width, e['width'])} Hz",
             f"converged={fit.result.converged} degenerate_doublet={fit.degenerate}"]
    print(notes[0], file=sys.stderr)
    status = EXIT_OK if fit.result.converged else EXIT_FIT
    return _fit_table(values, args, notes, status)


def cmd_constants(args, sc: Scenario, rng):
    rows = sorted(C.TABLE.items())
    units = {k: ("nm" if k.endswith("_nm") else HZ if k.endswith("_2pi_hz") else "1")
             for k, _ in rows}
    table = DataTable.from_columns({k: (units[k], [v]) for k, v in rows},
                                   [f"cavitybragg-constants v{C.TABLE_VERSION}"])
    return table, EXIT_OK


COMMANDS = {
    "bragg-scan": (cmd_bragg_scan, "|G(d)|^2 for both cavity modes versus atom spacing"),
    "photon-numbers": (cmd_photon_numbers, "steady-state photon numbers versus cavity detuning"),
    "spectrum": (cmd_spectrum, "thermal sideband cavity spectrum"),
    "empty-cavity": (cmd_empty_cavity, "empty-cavity chiral doublet"),
    "chiral": (cmd_chiral, "single-atom CW/CCW scattering spectra"),
    "cooling-limit": (cmd_cooling_limit, "resolved-sideband cavity cooling limit"),
    "scaling": (cmd_scaling, "collective enhancement versus atom number"),
    "contrast": (cmd_contrast, "Zeeman-state interference contrast versus detuning"),
    "fit-separation": (cmd_fit_separation, "fit periods and probe angle to two-mode scans"),
    "fit-spectrum": (cmd_fit_spectrum, "six-parameter sideband spectrum fit"),
    "fit-doublet": (cmd_fit_doublet, "Lorentzian doublet fit to an empty-cavity scan"),
    "constants": (cmd_constants, "physical constants table"),
    "echo": (None, "print the normalized scenario"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario file (defaults apply when omitted)")
    common.add_argument("--out", help="output path; standard output when omitted")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"seed for synthetic noise (default {DEFAULT_SEED})")
    common.add_argument("--grid", type=parse_grid, help="axis grid as min,max,n")
    common.add_argument("--efficiency", type=float, default=1.0,
                        help="detection efficiency applied to emitted rates")
    common.add_argument("--format", choices=["csv"], default="csv")
    common.add_argument("--noise", type=float, default=0.0,
                        help="relative noise added to generated rates")
    common.add_argument("--noise-mode", choices=["multiplicative", "shot"],
                        default="multiplicative")

    parser = _Parser(prog="cavitybragg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=text, description=text)
        if name in ("cooling-limit", "scaling"):
            p.add_argument("--mode", default="radial" if name == "cooling-limit" else "axial",
                           help="thermal mode label from the scenario")
        if name == "scaling":
            p.add_argument("--n-max", type=int, default=4)
            p.add_argument("--condition", choices=["constructive", "destructive"],
                           default="constructive")
            p.add_argument("--helicity", type=int, choices=[1, -1], default=1)
        if name.startswith("fit-"):
            p.add_argument("--data", help="input CSV")
            p.add_argument("--column", help="rate column to fit")
            p.add_argument("--weighted", action="store_true",
                           help="inverse-variance weights from the _err column")
        if name == "fit-spectrum":
            p.add_argument("--fix", action="append", metavar="NAME=VALUE",
                           help="hold a parameter fixed (frequencies in Hz)")
            p.add_argument("--no-radial", action="store_true",
                           help="drop the radial sideband manifold from the model")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.efficiency < 0 or not math.isfinite(args.efficiency):
            raise UsageError("--efficiency must be a non-negative number")
        if args.noise < 0:
            raise UsageError("--noise must be non-negative")
        if getattr(args, "n_max", 1) < 1:
            raise UsageError("--n-max must be at least 1")
        scenario = load_scenario(args.scenario) if args.scenario else Scenario()
        if args.command == "echo":
            text = format_scenario(scenario)
            status = EXIT_OK
        else:
            rng = np.random.default_rng(args.seed)
            table, status = COMMANDS[args.command][0](args, scenario, rng)
            text = format_table(table) if table is not None else None
    except (ScenarioError, TableError, UsageError, KeyError, ValueError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"cavitybragg {args.command}: {message}", file=sys.stderr)
        return EXIT_INVALID
    if text is not None:
        if args.out:
            write_text_atomic(args.out, text)
        else:
            sys.stdout.write(text)
    return status


def main(argv: Sequence[str] | None = None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
