"""Physical constants and the versioned cesium/cavity constants table.

The table ships as ``data/constants.txt`` in a line-oriented ``key = value``
format whose first line names the table version::

    # cavitybragg-constants v1
    wavelength_nm = 852.347
    ...

Frequencies in the file are ordinary Hz (``_2pi_hz`` means the value is
omega/2pi).  The module-level names below are converted to angular units
(rad/s) and nanometres so the rest of the package never multiplies by 2pi.
"""

from __future__ import annotations

import math
import re
from importlib import resources
from types import MappingProxyType
from typing import Mapping

from scipy import constants as _sc

HBAR = _sc.hbar
KB = _sc.k
TWO_PI = 2.0 * math.pi

TABLE_VERSION = 1
_HEADER = re.compile(r"^#\s*cavitybragg-constants\s+v(\d+)\s*$")


class ConstantsError(ValueError):
    pass


def parse_constants(text: str, source: str = "<constants>") -> dict[str, float]:
    lines = text.splitlines()
    if not lines:
        raise ConstantsError(f"{source}: empty constants table")
    match = _HEADER.match(lines[0])
    if match is None:
        raise ConstantsError(f"{source}:1: missing version header '# cavitybragg-constants v<N>'")
    if int(match.group(1)) != TABLE_VERSION:
        raise ConstantsError(
            f"{source}:1: unsupported table version {match.group(1)} (expected {TABLE_VERSION})"
        )
    values: dict[str, float] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConstantsError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConstantsError(f"{source}:{lineno}: duplicate key '{key}'")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConstantsError(f"{source}:{lineno}: '{key}' is not a number: {value!r}") from None
    return values


def format_constants(values: Mapping[str, float]) -> str:
    out = [f"# cavitybragg-constants v{TABLE_VERSION}"]
    out += [f"{key} = {value!r}" for key, value in values.items()]
    return "\n".join(out) + "\n"


def load_table() -> Mapping[str, float]:
    text = resources.files("cavitybragg").joinpath("data/constants.txt").read_text("utf-8")
    return MappingProxyType(parse_constants(text, "constants.txt"))


TABLE = load_table()

WAVELENGTH_NM = TABLE["wavelength_nm"]
GAMMA_CS_D2 = TWO_PI * TABLE["gamma_2pi_hz"]
HFS_F5_F4 = TWO_PI * TABLE["hfs_f5_f4_2pi_hz"]
HFS_F4_F3 = TWO_PI * TABLE["hfs_f4_f3_2pi_hz"]
RECOIL = TWO_PI * TABLE["recoil_2pi_hz"]
KAPPA = TWO_PI * TABLE["kappa_2pi_hz"]
COOPERATIVITY = TABLE["cooperativity"]
CHIRAL_SPLIT = TWO_PI * TABLE["chiral_split_2pi_hz"]
RADIAL_TRAP = TWO_PI * TABLE["radial_trap_2pi_hz"]
AXIAL_TRAP = TWO_PI * TABLE["axial_trap_2pi_hz"]

# Cooling-limit geometry presets: D for both radial axes, C per axis.
COOLING_D = TABLE["cooling_d_factor"]
COOLING_C_X = TABLE["cooling_c_x"]
COOLING_C_Y = TABLE["cooling_c_y"]
COOLING_C_MEAN = 0.5 * (COOLING_C_X + COOLING_C_Y)
MULTIPLICITY_FACTOR = TABLE["multiplicity_factor"]
POLARIZATION_FACTOR = TABLE["polarization_factor"]

# Cooled occupations and probe detuning used as scenario defaults
RADIAL_PHONON = TABLE["radial_phonon"]
AXIAL_PHONON = TABLE["axial_phonon"]
PROBE_DETUNING_ATOM = TWO_PI * TABLE["probe_detuning_atom_2pi_hz"]
