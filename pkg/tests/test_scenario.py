import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitybragg.constants import TWO_PI
from cavitybragg.scenario import (
    DuplicateKeyError,
    Scenario,
    ScenarioError,
    ScenarioSyntaxError,
    ScenarioValidationError,
    UnitSuffixError,
    UnknownKeyError,
    documented_keys,
    format_scenario,
    load_scenario,
    parse_scenario,
)

TILTED_DRIVE = """\
# three atoms under a tilted side drive
[array]
n_atoms = 3
spacing_nm = 15000

[probe]
wavelength_nm = 852.347
angle_deg = -5.07

[thermal]
label = axial
trap_2pi_hz = 20e3
n_phonon = 40
lamb_dicke = 0.17
"""

VALID_VALUE = {
    "n_atoms": "3", "spacing_nm": "15000", "offsets_nm": "0",
    "wavelength_nm": "852.347", "angle_deg": "-5.07", "rabi_2pi_hz": "1e6",
    "detuning_atom_2pi_hz": "1.521e9", "detuning_cavity_2pi_hz": "0",
    "kappa_2pi_hz": "36.7e3", "cooperativity": "21", "gamma_2pi_hz": "5.22e6",
    "chiral_split_2pi_hz": "8.417e6", "label": "radial", "trap_2pi_hz": "89e3",
    "n_phonon": "0.17", "lamb_dicke": "0.17", "f": "4", "population": "4 1",
    "d_factor": "2", "c_factor": "0.9", "eta_effective": "7", "multiplicity_factor": "0.5",
    "polarization_factor": "0.5",
}


class TestParse:
    def test_minimal(self):
        sc = parse_scenario("")
        assert sc == Scenario()
        assert sc.cavity_params().kappa == pytest.approx(TWO_PI * 36.7e3)
        assert sc.probe_geometry().wavelength_lambda == 852.347
        assert [m.label for m in sc.thermal_modes()] == ["radial", "axial"]
        assert sc.zeeman_distribution().populations[0] == pytest.approx(1 / 9)

    def test_tilted_drive_scenario(self):
        sc = parse_scenario(TILTED_DRIVE, "tilted.scn")
        assert sc.atom_array().n_atoms == 3
        assert sc.probe_geometry().incidence_angle_phi == -5.07
        mode = sc.thermal_mode("axial")
        assert mode.lamb_dicke == 0.17 and mode.n_phonon == 40
        echo = format_scenario(sc)
        assert "angle_deg = -5.07" in echo
        assert parse_scenario(echo) == sc

    def test_units_converted(self):
        sc = parse_scenario("[probe]\ndetuning_atom_2pi_hz = 1e9\n[cavity]\nkappa_2pi_hz = 1e3\n")
        assert sc.drive_params().delta_a == pytest.approx(TWO_PI * 1e9)
        assert sc.cavity_params().kappa == pytest.approx(TWO_PI * 1e3)

    def test_repeated_keys_and_sections(self):
        text = ("[array]\nn_atoms = 2\noffsets_nm = 0\noffsets_nm = 3.5\n"
                "[thermal]\nlabel = a\ntrap_2pi_hz = 1e4\nn_phonon = 1\n"
                "[thermal]\nlabel = b\ntrap_2pi_hz = 2e4\nn_phonon = 2\n"
                "[zeeman]\npopulation = 4 0.75\npopulation = 3, 0.25\n")
        sc = parse_scenario(text)
        assert sc.atom_array().offsets == (0.0, 3.5)
        assert [m.label for m in sc.thermal_modes()] == ["a", "b"]
        assert sc.zeeman_distribution().populations[4] == 0.75

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "s.scn"
        path.write_text(TILTED_DRIVE, encoding="utf-8")
        assert load_scenario(path) == parse_scenario(TILTED_DRIVE)


class TestDiagnostics:
    def error(self, text):
        with pytest.raises(ScenarioError) as info:
            parse_scenario(text, "case.scn")
        return info.value

    def test_negative_kappa(self):
        err = self.error("[cavity]\n\nkappa_2pi_hz = -3\n")
        assert isinstance(err, ScenarioValidationError)
        assert (err.source, err.line, err.key) == ("case.scn", 3, "kappa_2pi_hz")
        assert str(err).startswith("case.scn:3: kappa_2pi_hz:")

    def test_duplicate_key(self):
        err = self.error("[array]\nn_atoms = 2\nn_atoms = 3\n")
        assert isinstance(err, DuplicateKeyError) and err.line == 3 and "line 2" in str(err)

    def test_duplicate_section(self):
        assert isinstance(self.error("[array]\n[array]\n"), DuplicateKeyError)

    def test_unknown_key(self):
        err = self.error("[probe]\ncolour = red\n")
        assert isinstance(err, UnknownKeyError) and err.key == "colour"

    def test_unknown_section(self):
        assert isinstance(self.error("[laser]\n"), UnknownKeyError)

    def test_unit_suffix_mismatch(self):
        err = self.error("[cavity]\nkappa_khz = 36.7\n")
        assert isinstance(err, UnitSuffixError)
        assert "kappa_2pi_hz" in str(err)
        assert isinstance(self.error("[array]\nspacing_um = 15\n"), UnitSuffixError)

    def test_distinct_classes(self):
        kinds = {type(self.error(t)) for t in (
            "[array]\nn_atoms = 2\nn_atoms = 2\n", "[array]\nfoo = 1\n",
            "[array]\nspacing_m = 1\n", "[array]\nn_atoms = 0\n", "[array]\nn_atoms\n")}
        assert kinds == {DuplicateKeyError, UnknownKeyError, UnitSuffixError,
                         ScenarioValidationError, ScenarioSyntaxError}

    @pytest.mark.parametrize("text, key", [
        ("[array]\nn_atoms = 2.5\n", "n_atoms"),
        ("[array]\nn_atoms = 3\noffsets_nm = 1\n", "offsets_nm"),
        ("[probe]\nangle_deg = 90\n", "angle_deg"),
        ("[probe]\nwavelength_nm = abc\n", "wavelength_nm"),
        ("[thermal]\nlabel = x\nn_phonon = 1\n", "trap_2pi_hz"),
        ("[thermal]\ntrap_2pi_hz = 1e4\nn_phonon = -1\n", "n_phonon"),
        ("[thermal]\ntrap_2pi_hz = 1e4\nn_phonon = 1\n[thermal]\ntrap_2pi_hz = 2e4\n"
         "n_phonon = 1\n", "label"),
        ("[zeeman]\npopulation = 4 0.5\n", "population"),
        ("[zeeman]\npopulation = 5 1\n", "population"),
        ("[zeeman]\npopulation = 4 0.5\npopulation = 4 0.5\n", "population"),
        ("[cooling]\nmultiplicity_factor = 1.5\n", "multiplicity_factor"),
    ])
    def test_invariants(self, text, key):
        assert self.error(text).key == key

    def test_key_outside_section(self):
        assert isinstance(self.error("n_atoms = 2\n"), ScenarioSyntaxError)


class TestEcho:
    @pytest.mark.parametrize("text", ["", TILTED_DRIVE, "[zeeman]\npopulation = 4 0.5\npopulation = -4 0.5\n",
                                      "[probe]\nangle_deg = 0.1\nrabi_2pi_hz = 123456.789012345\n"])
    def test_idempotent(self, text):
        once = parse_scenario(text)
        echo = format_scenario(once)
        assert parse_scenario(echo) == once
        assert format_scenario(parse_scenario(echo)) == echo


SECTIONS = sorted(documented_keys())
identifiers = st.from_regex(r"[a-z][a-z0-9_]{0,20}", fullmatch=True)


class TestFuzz:
    @settings(max_examples=400, deadline=None)
    @given(section=st.sampled_from(SECTIONS), key=identifiers)
    def test_accepts_exactly_documented_keys(self, section, key):
        documented = documented_keys()[section]
        value = VALID_VALUE.get(key, "1")
        text = f"[{section}]\n{key} = {value}\n"
        if section == "array" and key != "n_atoms":
            text += "n_atoms = 1\n"
        if section == "thermal" and key not in ("trap_2pi_hz", "n_phonon"):
            text += "trap_2pi_hz = 1e4\nn_phonon = 1\n"
        elif section == "thermal":
            other = "n_phonon" if key == "trap_2pi_hz" else "trap_2pi_hz"
            text += f"{other} = {VALID_VALUE[other]}\n"
        if key in documented:
            parse_scenario(text)
        else:
            with pytest.raises((UnknownKeyError, UnitSuffixError)):
                parse_scenario(text)

    def test_every_documented_key(self):
        for section, keys in documented_keys().items():
            for key in keys:
                self.test_accepts_exactly_documented_keys.hypothesis.inner_test(self, section, key)
