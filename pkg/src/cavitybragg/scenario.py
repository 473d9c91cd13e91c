"""Scenario files: bracketed sections of ``key = value`` lines.

Frequencies use the suffix ``_2pi_hz`` (the value is omega/2pi in Hz) and
are converted to angular units when domain objects are built.  Lists are
written as repeated keys, e.g. ``offsets_nm`` or ``population = m c``.
``[thermal]`` may appear several times, one section per motional mode.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from typing import Any, Callable

from . import constants as C
from .cavity import CavityParams, DriveParams
from .geometry import AtomArray, ProbeGeometry
from .multilevel import ZeemanDistribution
from .thermal import ThermalMode

UNIT_SUFFIXES = (
    "_2pi_ghz", "_2pi_mhz", "_2pi_khz", "_2pi_hz", "_rad_s", "_ghz", "_mhz", "_khz", "_hz",
    "_nm", "_um", "_mm", "_cm", "_m", "_deg", "_rad", "_uk", "_mk", "_k", "_s", "_ms", "_us",
)


class ScenarioError(ValueError):
    def __init__(self, source: str, line: int, key: str, message: str):
        self.source, self.line, self.key = source, line, key
        super().__init__(f"{source}:{line}: {key}: {message}")


class ScenarioSyntaxError(ScenarioError):
    pass


class DuplicateKeyError(ScenarioError):
    pass


class UnknownKeyError(ScenarioError):
    pass


class UnitSuffixError(ScenarioError):
    pass


class ScenarioValidationError(ScenarioError):
    """A value violates a documented invariant."""


# ---------------------------------------------------------------------------
# key schema


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    repeat: bool = False


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"{text!r} is not an integer")
    return int(value)


def _float(text: str) -> float:
    return float(text)


def _label(text: str) -> str:
    if not re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", text):
        raise ValueError(f"{text!r} is not a plain identifier")
    return text


def _population(text: str) -> tuple[int, float]:
    parts = text.replace(",", " ").split()
    if len(parts) != 2:
        raise ValueError("expected 'm c'")
    return _int(parts[0]), float(parts[1])


_POS = (lambda v: math.isfinite(v) and v > 0, "must be positive and finite")
_NONNEG = (lambda v: math.isfinite(v) and v >= 0, "must be non-negative and finite")
_FINITE = (math.isfinite, "must be finite")
_FRACTION = (lambda v: 0 < v <= 1, "must lie in (0, 1]")

SCHEMA: dict[str, dict[str, Key]] = {
    "array": {
        "n_atoms": Key(_int, lambda v: v >= 1, "must be at least 1"),
        "spacing_nm": Key(_float, *_POS),
        "offsets_nm": Key(_float, *_FINITE, repeat=True),
    },
    "probe": {
        "wavelength_nm": Key(_float, *_POS),
        "angle_deg": Key(_float, lambda v: abs(v) < 90, "must satisfy |angle| < 90"),
        "rabi_2pi_hz": Key(_float, *_NONNEG),
        "detuning_atom_2pi_hz": Key(_float, *_FINITE),
        "detuning_cavity_2pi_hz": Key(_float, *_FINITE),
    },
    "cavity": {
        "kappa_2pi_hz": Key(_float, *_POS),
        "cooperativity": Key(_float, *_POS),
        "gamma_2pi_hz": Key(_float, *_POS),
        "chiral_split_2pi_hz": Key(_float, *_NONNEG),
    },
    "thermal": {
        "label": Key(_label),
        "trap_2pi_hz": Key(_float, *_POS),
        "n_phonon": Key(_float, *_NONNEG),
        "lamb_dicke": Key(_float, *_NONNEG),
    },
    "zeeman": {
        "f": Key(_int, lambda v: 0 <= v <= 10, "must lie in 0..10"),
        "population": Key(_population, lambda v: math.isfinite(v[1]) and v[1] >= 0,
                          "population must be non-negative", repeat=True),
    },
    "cooling": {
        "d_factor": Key(_float, *_POS),
        "c_factor": Key(_float, *_POS),
        "eta_effective": Key(_float, *_POS),
        "multiplicity_factor": Key(_float, *_FRACTION),
        "polarization_factor": Key(_float, *_FRACTION),
    },
}
REPEATABLE_SECTIONS = {"thermal"}
REQUIRED = {"thermal": ("trap_2pi_hz", "n_phonon")}


def documented_keys() -> dict[str, tuple[str, ...]]:
    return {name: tuple(keys) for name, keys in SCHEMA.items()}


# ---------------------------------------------------------------------------
# sections


@dataclass(frozen=True)
class ArraySection:
    n_atoms: int = 2
    spacing_nm: float = 15000.0
    offsets_nm: tuple[float, ...] = ()


@dataclass(frozen=True)
class ProbeSection:
    wavelength_nm: float = C.WAVELENGTH_NM
    angle_deg: float = 0.0
    rabi_2pi_hz: float = 10.0e6
    detuning_atom_2pi_hz: float = C.TABLE["probe_detuning_atom_2pi_hz"]
    detuning_cavity_2pi_hz: float = 0.0


@dataclass(frozen=True)
class CavitySection:
    kappa_2pi_hz: float = C.TABLE["kappa_2pi_hz"]
    cooperativity: float = C.COOPERATIVITY
    gamma_2pi_hz: float = C.TABLE["gamma_2pi_hz"]
    chiral_split_2pi_hz: float = C.TABLE["chiral_split_2pi_hz"]


@dataclass(frozen=True)
class ThermalSection:
    label: str = "radial"
    trap_2pi_hz: float = C.TABLE["radial_trap_2pi_hz"]
    n_phonon: float = C.RADIAL_PHONON
    lamb_dicke: float | None = None


DEFAULT_THERMAL = (
    ThermalSection("radial", C.TABLE["radial_trap_2pi_hz"], C.RADIAL_PHONON),
    ThermalSection("axial", C.TABLE["axial_trap_2pi_hz"], C.AXIAL_PHONON),
)


@dataclass(frozen=True)
class ZeemanSection:
    f: int = 4
    population: tuple[tuple[int, float], ...] = ()


@dataclass(frozen=True)
class CoolingSection:
    d_factor: float = C.COOLING_D
    c_factor: float = C.COOLING_C_MEAN
    eta_effective: float | None = None
    multiplicity_factor: float = C.MULTIPLICITY_FACTOR
    polarization_factor: float = C.POLARIZATION_FACTOR


@dataclass(frozen=True)
class Scenario:
    array: ArraySection = field(default_factory=ArraySection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    cavity: CavitySection = field(default_factory=CavitySection)
    thermal: tuple[ThermalSection, ...] = DEFAULT_THERMAL
    zeeman: ZeemanSection = field(default_factory=ZeemanSection)
    cooling: CoolingSection = field(default_factory=CoolingSection)

    def atom_array(self) -> AtomArray:
        offsets = self.array.offsets_nm or None
        return AtomArray(self.array.n_atoms, self.array.spacing_nm, offsets)

    def probe_geometry(self) -> ProbeGeometry:
        return ProbeGeometry(self.probe.wavelength_nm, self.probe.angle_deg)

    def cavity_params(self) -> CavityParams:
        c = self.cavity
        return CavityParams(C.TWO_PI * c.kappa_2pi_hz, c.cooperativity,
                            C.TWO_PI * c.gamma_2pi_hz, C.TWO_PI * c.chiral_split_2pi_hz)

    def drive_params(self) -> DriveParams:
        p = self.probe
        return DriveParams(C.TWO_PI * p.rabi_2pi_hz, C.TWO_PI * p.detuning_atom_2pi_hz,
                           C.TWO_PI * p.detuning_cavity_2pi_hz)

    def thermal_modes(self) -> list[ThermalMode]:
        return [ThermalMode(C.TWO_PI * t.trap_2pi_hz, t.n_phonon, t.lamb_dicke, t.label)
                for t in self.thermal]

    def thermal_mode(self, label: str) -> ThermalMode:
        for mode in self.thermal_modes():
            if mode.label == label:
                return mode
        raise KeyError(f"scenario has no thermal mode labelled {label!r}")

    def zeeman_distribution(self) -> ZeemanDistribution:
        if not self.zeeman.population:
            return ZeemanDistribution.uniform(self.zeeman.f)
        return ZeemanDistribution(self.zeeman.f, dict(self.zeeman.population))


# ---------------------------------------------------------------------------
# parsing


def _stem(key: str) -> str:
    for suffix in UNIT_SUFFIXES:
        if key.endswith(suffix) and len(key) > len(suffix):
            return key[: -len(suffix)]
    return key


def _reject_key(source, lineno, section, key):
    known = SCHEMA[section]
    for candidate in known:
        if _stem(candidate) == _stem(key):
            raise UnitSuffixError(source, lineno, key,
                                  f"unit suffix does not match; [{section}] expects {candidate!r}")
    raise UnknownKeyError(source, lineno, key,
                          f"unknown key in [{section}]; expected one of {', '.join(known)}")


@dataclass
class _RawSection:
    name: str
    line: int
    values: dict[str, Any] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)


_SECTION = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")


def _read_sections(text: str, source: str) -> list[_RawSection]:
    sections: list[_RawSection] = []
    seen: dict[str, int] = {}
    current: _RawSection | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        match = _SECTION.match(line)
        if match:
            name = match.group(1).lower()
            if name not in SCHEMA:
                raise UnknownKeyError(source, lineno, f"[{name}]",
                                      f"unknown section; expected one of {', '.join(SCHEMA)}")
            if name in seen and name not in REPEATABLE_SECTIONS:
                raise DuplicateKeyError(source, lineno, f"[{name}]",
                                        f"section repeated (first at line {seen[name]})")
            seen.setdefault(name, lineno)
            current = _RawSection(name, lineno)
            sections.append(current)
            continue
        if "=" not in line:
            raise ScenarioSyntaxError(source, lineno, line, "expected 'key = value' or '[section]'")
        key, _, value = (part.strip() for part in line.partition("="))
        if current is None:
            raise ScenarioSyntaxError(source, lineno, key, "key outside any section")
        if key not in SCHEMA[current.name]:
            _reject_key(source, lineno, current.name, key)
        spec = SCHEMA[current.name][key]
        if key in current.values and not spec.repeat:
            raise DuplicateKeyError(source, lineno, key,
                                    f"duplicate key (first at line {current.lines[key]})")
        try:
            parsed = spec.parse(value)
        except ValueError as exc:
            raise ScenarioValidationError(source, lineno, key, f"cannot parse {value!r}: {exc}")
        if spec.check is not None and not spec.check(parsed):
            raise ScenarioValidationError(source, lineno, key, f"{value!r} {spec.rule}")
        if spec.repeat:
            current.values.setdefault(key, []).append(parsed)
        else:
            current.values[key] = parsed
        current.lines.setdefault(key, lineno)
    return sections


def _build(cls, raw: _RawSection):
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.values.items()}
    return cls(**values)


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse and fully validate a scenario; errors name source, line and key."""
    sections = _read_sections(text, source)
    kwargs: dict[str, Any] = {}
    thermal = []
    kinds = {"array": ArraySection, "probe": ProbeSection, "cavity": CavitySection,
             "zeeman": ZeemanSection, "cooling": CoolingSection}
    for raw in sections:
        if raw.name == "thermal":
            for key in REQUIRED["thermal"]:
                if key not in raw.values:
                    raise ScenarioValidationError(source, raw.line, key,
                                                  "required in every [thermal] section")
            thermal.append(_build(ThermalSection, raw))
        else:
            kwargs[raw.name] = _build(kinds[raw.name], raw)
    if thermal:
        kwargs["thermal"] = tuple(thermal)
    if "zeeman" in kwargs:
        pops = kwargs["zeeman"].population
        kwargs["zeeman"] = ZeemanSection(kwargs["zeeman"].f, tuple(sorted(pops)))
    scenario = Scenario(**kwargs)
    _validate(scenario, sections, source)
    return scenario


def _where(sections, name, key=None, index=0):
    matching = [s for s in sections if s.name == name]
    if len(matching) <= index:
        return 0
    raw = matching[index]
    return raw.lines.get(key, raw.line) if key else raw.line


def _validate(scenario: Scenario, sections, source: str):
    """Re-check cross-key invariants by building every domain object."""
    a = scenario.array
    if a.offsets_nm and len(a.offsets_nm) != a.n_atoms:
        raise ScenarioValidationError(
            source, _where(sections, "array", "offsets_nm"), "offsets_nm",
            f"{len(a.offsets_nm)} offsets given for {a.n_atoms} atoms")
    labels = [t.label for t in scenario.thermal]
    for i, label in enumerate(labels):
        if label in labels[:i]:
            raise ScenarioValidationError(source, _where(sections, "thermal", "label", i),
                                          "label", f"thermal label {label!r} used twice")
    z = scenario.zeeman
    ms = [m for m, _ in z.population]
    for m in ms:
        if abs(m) > z.f:
            raise ScenarioValidationError(source, _where(sections, "zeeman", "population"),
                                          "population", f"sublevel m={m} outside F={z.f}")
    if len(set(ms)) != len(ms):
        raise DuplicateKeyError(source, _where(sections, "zeeman", "population"),
                                "population", "a sublevel is listed twice")
    checks = [
        ("array", "n_atoms", scenario.atom_array),
        ("probe", None, scenario.probe_geometry),
        ("cavity", None, scenario.cavity_params),
        ("zeeman", "population", scenario.zeeman_distribution),
    ]
    for name, key, build in checks:
        try:
            build()
        except ValueError as exc:
            raise ScenarioValidationError(source, _where(sections, name, key), key or f"[{name}]",
                                          str(exc)) from None
    for i, t in enumerate(scenario.thermal):
        try:
            ThermalMode(C.TWO_PI * t.trap_2pi_hz, t.n_phonon, t.lamb_dicke, t.label)
        except ValueError as exc:
            raise ScenarioValidationError(source, _where(sections, "thermal", None, i),
                                          "[thermal]", str(exc)) from None


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as handle:
        return parse_scenario(handle.read(), source=str(path))


# ---------------------------------------------------------------------------
# echo


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit_section(name: str, section, lines: list[str]):
    lines.append(f"[{name}]")
    for f in fields(section):
        value = getattr(section, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            for item in value:
                text = " ".join(_fmt(x) for x in item) if isinstance(item, tuple) else _fmt(item)
                lines.append(f"{f.name} = {text}")
        else:
            lines.append(f"{f.name} = {_fmt(value)}")
    lines.append("")


def format_scenario(scenario: Scenario) -> str:
    """Normalized text form: every section, every key, canonical order."""
    lines: list[str] = []
    _emit_section("array", scenario.array, lines)
    _emit_section("probe", scenario.probe, lines)
    _emit_section("cavity", scenario.cavity, lines)
    for t in scenario.thermal:
        _emit_section("thermal", t, lines)
    # no population lines means the uniform distribution over all sublevels
    _emit_section("zeeman", scenario.zeeman, lines)
    _emit_section("cooling", scenario.cooling, lines)
    return "\n".join(lines)
