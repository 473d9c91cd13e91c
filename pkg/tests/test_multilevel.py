import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import S
from sympy.physics.quantum.cg import CG

from cavitybragg.constants import TWO_PI
from cavitybragg.multilevel import (
    LevelData,
    RayleighAmplitudes,
    ZeemanDistribution,
    cg_coefficient,
    cg_squared,
    chiral_weights,
    clebsch_gordan,
    interference_contrast,
    multilevel_scaling,
    rayleigh_amplitude,
    rayleigh_amplitudes,
    two_atom_photon_number,
)

LEVELS = LevelData()
D100 = TWO_PI * 100e6

# Self-generated regression values: alpha_m^(q) * 2pi*1 MHz at Delta_ca/2pi = 100 MHz
# with the shipped constants table.  Self-generated reference values.
FROZEN_100MHZ = {
    (0, +1): complex(0.0050568338841325, -9.895273644441838e-05),
    (0, -1): complex(0.0050568338841325, -9.895273644441838e-05),
    (1, +1): complex(0.006095995132419087, -0.00013195759979731035),
    (1, -1): complex(0.004147624912518045, -7.092289565283449e-05),
    (2, +1): complex(0.007265108657377809, -0.00016993748571151031),
    (2, -1): complex(0.003368368217575728, -4.786807742255858e-05),
    (3, +1): complex(0.008564174459008669, -0.00021289239418701835),
    (3, -1): complex(0.0027190637993055452, -2.97882817535907e-05),
    (4, +1): complex(0.00999319253731166, -0.00026082232522383437),
    (4, -1): complex(0.0021997116577074966, -1.6683508645930855e-05),
}


def sympy_cg(f, m, q, fp):
    return float(CG(S(f), S(m), S(1), S(q), S(fp), S(m + q)).doit())


class TestClebschGordan:
    def test_stretched(self):
        assert cg_coefficient(4, 4, 1, 5) == 1.0
        assert cg_squared(4, 4, 1, 5) / cg_squared(4, 4, -1, 5) == 45
        assert cg_squared(4, 4, -1, 5) == Fraction(1, 45)
        assert cg_coefficient(4, 4, 1, 4) == 0.0

    def test_against_sympy(self):
        for fp in (3, 4, 5):
            for m in range(-4, 5):
                for q in (-1, 0, 1):
                    if abs(m + q) > fp:
                        assert cg_coefficient(4, m, q, fp) == 0.0
                        continue
                    assert cg_coefficient(4, m, q, fp) == pytest.approx(
                        sympy_cg(4, m, q, fp), abs=1e-14)

    def test_half_integer_against_sympy(self):
        for j1, m1, j2, m2, j, m in [(S(1) / 2, S(1) / 2, S(1) / 2, -S(1) / 2, 1, 0),
                                     (S(3) / 2, S(1) / 2, 1, 1, S(5) / 2, S(3) / 2),
                                     (S(3) / 2, -S(3) / 2, 1, 0, S(1) / 2, -S(3) / 2)]:
            args = [float(x) for x in (j1, m1, j2, m2, j, m)]
            assert clebsch_gordan(*args) == pytest.approx(float(CG(j1, m1, j2, m2, j, m).doit()),
                                                          abs=1e-14)

    def test_reflection_symmetry(self):
        for fp in (3, 4, 5):
            for m in range(-4, 5):
                for q in (-1, 1):
                    assert cg_squared(4, m, q, fp) == cg_squared(4, -m, -q, fp)

    def test_sum_rule(self):
        totals = []
        for m in range(-4, 5):
            per_q = {q: sum(cg_squared(4, m, q, fp) for fp in (3, 4, 5)) for q in (-1, 0, 1)}
            assert all(v == 1 for v in per_q.values())
            totals.append(float(sum(per_q.values())))
            circular = float(per_q[1] + per_q[-1])
            assert abs(circular - 2.0) <= 1e-12
        assert max(totals) - min(totals) <= 1e-12

    @pytest.mark.parametrize("args", [(4, 5, 1, 5), (4, 0, 2, 5), (4, 0.3, 1, 5), (-1, 0, 1, 5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            cg_coefficient(*args)


class TestAmplitudes:
    def test_single_level_channel(self):
        alpha = rayleigh_amplitude(4, 1, LEVELS, D100)
        assert alpha == pytest.approx(1.0 / (D100 + 0.5j * LEVELS.gamma), rel=1e-14)

    def test_far_detuned_ratio_with_top_level_only(self):
        top = LevelData(offsets={5: 0.0})
        far = TWO_PI * 1e12
        ratio = abs(rayleigh_amplitude(4, 1, top, far) / rayleigh_amplitude(4, -1, top, far))
        # each amplitude carries cg^2 (absorb and emit in q), so the amplitude ratio is 45
        assert ratio == pytest.approx(45.0, rel=1e-12)
        assert ratio ** 2 == pytest.approx(45.0 ** 2, rel=1e-12)

    def test_frozen_table(self):
        for key, value in FROZEN_100MHZ.items():
            got = rayleigh_amplitude(*key, LEVELS, D100) * TWO_PI * 1e6
            assert got == pytest.approx(value, rel=1e-12)

    def test_frozen_table_direct_sum(self):
        # the same table from the closed-form CG values and the raw level offsets
        for (m, q), value in FROZEN_100MHZ.items():
            total = 0j
            for fp, offset in LEVELS.offsets.items():
                if abs(m + q) <= fp:
                    total += sympy_cg(4, m, q, fp) ** 2 / (D100 - offset + 0.5j * LEVELS.gamma)
            assert total * TWO_PI * 1e6 == pytest.approx(value, rel=1e-12)

    def test_detuning_limit(self):
        def spread(delta):
            amps = rayleigh_amplitudes(LEVELS, delta).amplitudes
            return max(abs(amps[(m, q)] / amps[(0, q)] - 1) for m in range(-4, 5) for q in (1, -1))
        assert spread(TWO_PI * 10e9) < spread(D100)
        assert spread(TWO_PI * 10e9) < 0.1

    def test_helicity_reflection(self):
        amps = rayleigh_amplitudes(LEVELS, D100).amplitudes
        for m in range(-4, 5):
            for q in (1, -1):
                assert abs(amps[(m, q)]) ** 2 == pytest.approx(abs(amps[(-m, -q)]) ** 2, rel=1e-14)


populations = st.lists(st.floats(0.0, 1.0), min_size=9, max_size=9).filter(lambda c: sum(c) > 1e-3)
amplitude_lists = st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                           min_size=9, max_size=9)


def make_state(weights):
    total = math.fsum(weights)
    pops = [w / total for w in weights]
    pops[-1] = 1.0 - math.fsum(pops[:-1])
    pops[-1] = max(pops[-1], 0.0)
    return ZeemanDistribution(4, {m: c for m, c in zip(range(-4, 5), pops)})


class TestContrast:
    def test_single_sublevel(self):
        amps = rayleigh_amplitudes(LEVELS, D100)
        for m in range(-4, 5):
            z = ZeemanDistribution(4, {m: 1.0})
            assert interference_contrast(z, amps, 1) == 1.0

    def test_half_half(self):
        table = {(m, q): 0j for m in range(-4, 5) for q in (1, -1)}
        table[(4, 1)] = 1.0
        z = ZeemanDistribution(4, {4: 0.5, -4: 0.5})
        assert interference_contrast(z, RayleighAmplitudes(table, 0.0), 1) == pytest.approx(0.5)

    @settings(max_examples=1000, deadline=None)
    @given(weights=populations, amps=amplitude_lists)
    def test_cauchy_schwarz(self, weights, amps):
        z = make_state(weights)
        table = {}
        for m, (re, im) in zip(range(-4, 5), amps):
            table[(m, 1)] = complex(re, im)
            table[(m, -1)] = complex(im, re)
        a = RayleighAmplitudes(table, 0.0)
        c = np.array([z.populations[m] for m in range(-4, 5)])
        alpha = np.array([table[(m, 1)] for m in range(-4, 5)])
        if np.sum(c * np.abs(alpha) ** 2) == 0:
            return
        value = interference_contrast(z, a, 1)
        assert 0.0 <= value <= 1.0

    def test_monotone_in_detuning(self):
        z = ZeemanDistribution.uniform()
        grid = TWO_PI * np.geomspace(100e6, 1.521e9, 40)
        for q in (1, -1):
            values = [interference_contrast(z, rayleigh_amplitudes(LEVELS, d), q) for d in grid]
            assert values[0] < 1
            assert all(b > a for a, b in zip(values, values[1:]))

    def test_zeeman_validation(self):
        with pytest.raises(ValueError):
            ZeemanDistribution(4, {0: 0.5})
        with pytest.raises(ValueError):
            ZeemanDistribution(4, {5: 1.0})
        with pytest.raises(ValueError):
            ZeemanDistribution(4, {0: 1.5, 1: -0.5})


class TestScaling:
    def test_unit_contrast_is_n_squared(self):
        amps = rayleigh_amplitudes(LEVELS, D100)
        z = ZeemanDistribution(4, {4: 1.0})
        assert multilevel_scaling(z, amps, 1, 5) == [(n, float(n * n)) for n in range(1, 6)]

    def test_two_atom_formula(self):
        amps = rayleigh_amplitudes(LEVELS, D100)
        for z in (ZeemanDistribution.uniform(), ZeemanDistribution.equal([2, 3, 4]),
                  ZeemanDistribution.stretched(purity=0.7)):
            for q in (1, -1):
                c = np.array([z.populations[m] for m in range(-4, 5)])
                alpha = np.array([amps.amplitudes[(m, q)] for m in range(-4, 5)])
                incoherent = np.sum(c * np.abs(alpha) ** 2)
                coherent = abs(np.sum(c * alpha)) ** 2
                two = two_atom_photon_number(z, amps, q, 0.0)
                # 2 sum c|a|^2 + 2|sum c a|^2, term by term
                assert two == pytest.approx(2 * incoherent + 2 * coherent, rel=1e-12)
                n2 = dict(multilevel_scaling(z, amps, q, 2))[2]
                assert n2 == pytest.approx(two / incoherent, rel=1e-12)
                contrast = interference_contrast(z, amps, q)
                assert n2 == pytest.approx(2 + 2 * contrast, rel=1e-12)

    def test_stretched_above_uniform(self):
        amps = rayleigh_amplitudes(LEVELS, D100)
        uniform = multilevel_scaling(ZeemanDistribution.uniform(), amps, 1, 4)
        stretched = multilevel_scaling(ZeemanDistribution.equal([2, 3, 4]), amps, 1, 4)
        for (n, u), (_, s) in zip(uniform, stretched):
            if n == 1:
                assert u == s == 1.0
                continue
            assert u < s < n * n

    def test_n_max(self):
        with pytest.raises(ValueError):
            multilevel_scaling(ZeemanDistribution.uniform(), rayleigh_amplitudes(LEVELS, D100), 1, 0)


class TestChiralWeights:
    def test_stretched(self):
        w = chiral_weights(ZeemanDistribution(4, {4: 1.0}))
        assert w[1] / w[-1] == pytest.approx(45.0, rel=1e-14)

    def test_uniform_balanced(self):
        w = chiral_weights(ZeemanDistribution.uniform())
        assert w[1] == pytest.approx(w[-1], rel=1e-14)
