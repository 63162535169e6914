import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decayctl import modulation as md
from decayctl import optimizer as op
from decayctl import rate_engine as re
from decayctl import spectra as sp


def band_edge(C=1e-3, omega_a=0.1):
    return sp.CouplingSpectrum(sp.BandEdge(C, 1.0), omega_a)


class TestBand:
    def test_single_point_equals_longtime(self):
        s = sp.CouplingSpectrum(sp.LorentzianPeak(0.01, 0.0, 1.0), 0.3)
        h = md.harmonic_decomposition(md.ImpulsivePM(1.0, 2.0), 64)
        assert op.band_rate(s, h, op.Band.single(0.3)) == re.longtime_rate(s, h)

    def test_flat_two_points(self):
        s = sp.CouplingSpectrum(sp.FlatCutoff(0.2, math.inf, -math.inf), 0.0)
        h = md.harmonic_decomposition(md.ImpulsivePM(2.0, 1.0), 64)
        for w in ([0.5, 0.5], [0.9, 0.1], [0.0, 1.0]):
            r = op.band_rate(s, h, op.Band([-1.0, 3.0], w))
            # the truncated harmonic list carries 1 - tail_mass of the weight
            assert r == pytest.approx(2 * math.pi * 0.2 * (1 - h.tail_mass), rel=1e-12)
        h1 = md.harmonic_decomposition(md.Constant(1.0))
        assert op.band_rate(s, h1, op.Band([-1.0, 3.0], [0.3, 0.7])) == pytest.approx(2 * math.pi * 0.2, rel=1e-14)

    def test_straddling_edge_shifted_below(self):
        # [DERIVED] direct evaluation: both omega_a + delta < 0
        s = band_edge()
        b = op.Band([-0.05, 0.1], [0.5, 0.5])
        h = md.harmonic_decomposition(md.Monochromatic(1.0, -0.3))
        assert op.band_rate(s, h, b) == 0.0
        assert op.band_survival(s, h, b, 10.0) == 1.0

    def test_survival_average(self):
        s = band_edge(C=1.0)
        b = op.Band([0.1, 0.5], [0.25, 0.75])
        h = md.harmonic_decomposition(md.Constant(1.0))
        r1, r2 = (sp.golden_rule_rate(s.at(w)) for w in (0.1, 0.5))
        assert op.band_survival(s, h, b, 2.0) == pytest.approx(0.25 * math.exp(-2 * r1) + 0.75 * math.exp(-2 * r2))
        assert op.survival_exponent(s, h, b, 2.0) == pytest.approx(
            -math.log(0.25 * math.exp(-2 * r1) + 0.75 * math.exp(-2 * r2)) / 2.0)

    def test_invalid(self):
        with pytest.raises(op.OptimizationError):
            op.Band([], [])
        with pytest.raises(op.OptimizationError):
            op.Band([0.0, 1.0], [0.5, 0.6])
        with pytest.raises(op.OptimizationError):
            op.Band([0.0, 1.0], [1.5, -0.5])

    def test_load_normalizes(self, tmp_path):
        f = tmp_path / "band.txt"
        f.write_text("# omega_a weight\n0.1 1\n0.2 3\n")
        b = op.load_band(f)
        assert np.allclose(b.weights, [0.25, 0.75])


class TestFreeHarmonics:
    def test_shift_below_edge(self):
        prob = op.ControlProblem(band_edge(C=1.0), op.FreeHarmonics([-0.2, 0.0, 0.2]))
        res = op.optimize(prob)
        assert res.params["omega_k"] == -0.2
        assert res.value == 0.0
        assert list(res.weights) == [1.0, 0.0, 0.0]

    def test_maximize_onto_peak(self):
        delta = 0.7
        s = sp.CouplingSpectrum(sp.LorentzianPeak(0.001, 0.0, 0.5), -delta)
        res = op.optimize(op.ControlProblem(s, op.FreeHarmonics([-delta, 0.0, delta, 2 * delta]), objective="maximize"))
        assert res.params["omega_k"] == delta
        assert res.value == pytest.approx(2 * math.pi * 0.001 / 0.5)

    def test_ties_prefer_small_shift(self):
        s = sp.CouplingSpectrum(sp.FlatCutoff(0.01, math.inf, -math.inf), 0.0)
        res = op.optimize(op.ControlProblem(s, op.FreeHarmonics([-1.0, 2.0, 0.5, -0.7])))
        assert res.params["omega_k"] == 0.5

    @given(st.lists(st.floats(0.0, 1.0), min_size=8, max_size=8), st.sampled_from(["minimize", "maximize"]))
    @settings(max_examples=30, deadline=None)
    def test_vertex_property(self, values, objective):
        grid = np.linspace(-2.0, 2.0, 8)
        s = sp.CouplingSpectrum(sp.Tabulated(grid, np.array(values) * 1e-4), 0.0)
        omegas = np.array([-1.5, -0.4, 0.3, 1.1])
        res = op.optimize(op.ControlProblem(s, op.FreeHarmonics(omegas), objective=objective, max_validity=None))
        # [DERIVED] exhaustive scan over vertices
        vertex = 2 * math.pi * s.G(omegas)
        best = vertex.min() if objective == "minimize" else vertex.max()
        assert res.value == best
        assert np.count_nonzero(res.weights) == 1
        assert res.weights.sum() == 1.0

    def test_band_average(self):
        s = band_edge(C=1.0)
        b = op.Band([0.05, 0.3], [0.5, 0.5])
        res = op.optimize(op.ControlProblem(s, op.FreeHarmonics([-0.1, 0.0, 0.1]), band=b, band_objective="rate",
                                            max_validity=None))
        # at -0.1 the lower member is pushed below the edge
        vals = [0.5 * 2 * math.pi * (s.G(np.array([0.05 + w]))[0] + s.G(np.array([0.3 + w]))[0]) for w in (-0.1, 0.0, 0.1)]
        assert res.params["omega_k"] == -0.1
        assert res.value == pytest.approx(min(vals), rel=1e-14)

    def test_infeasible(self):
        s = band_edge(C=1.0)
        with pytest.raises(op.InfeasibleProblem) as exc:
            op.optimize(op.ControlProblem(s, op.FreeHarmonics([0.0, 0.2])))
        assert len(exc.value.validity_map) == 2
        assert all(r > 0.1 for _, r in exc.value.validity_map)


class TestParametric:
    def test_pm_band_edge_small_phi(self):
        s = band_edge()
        prob = op.ControlProblem(s, op.PMFamily())
        res = op.optimize(prob)
        # [DERIVED] exhaustive grid as oracle, with the same validity filter
        best = math.inf
        for phi in np.linspace(0.02, math.pi, 64):
            for tau in np.linspace(1.0, 30.0, 64):
                h = md.harmonic_decomposition(md.ImpulsivePM(phi, tau), 64)
                if re.validity_ratio(s, h) <= 0.1:
                    best = min(best, re.longtime_rate(s, h))
        assert 0.0 <= res.value <= best
        assert res.params["phi"] < 0.5
        assert res.validity <= 0.1
        assert res.improvement > 1.0
        assert res.evaluations > 64 * 64

    def test_maximize_at_least_grid(self):
        s = sp.CouplingSpectrum(sp.LorentzianPeak(1e-3, 0.0, 1.0), 0.5)
        prob = op.ControlProblem(s, op.PMFamily(phi=(0.1, math.pi), tau=(1.0, 10.0)), objective="maximize", grid=16)
        res = op.optimize(prob)
        grid = [re.longtime_rate(s, md.harmonic_decomposition(md.ImpulsivePM(p, t), 64))
                for p in np.linspace(0.1, math.pi, 16) for t in np.linspace(1.0, 10.0, 16)]
        assert res.value >= max(grid)

    def test_monochromatic_below_edge(self):
        res = op.optimize(op.ControlProblem(band_edge(), op.MonochromaticFamily((-1.0, 1.0)), grid=32))
        assert res.value == 0.0
        assert res.params["delta"] + 0.1 <= 0.0

    def test_am_skips_infeasible_boxes(self):
        s = sp.CouplingSpectrum(sp.LorentzianPeak(1e-3, 0.0, 1.0), 0.0)
        res = op.optimize(op.ControlProblem(s, op.AMFamily((0.5, 5.0), (1.0, 6.0)), grid=12))
        assert res.params["tau_on"] <= res.params["period"]
        assert math.isfinite(res.value)

    def test_single_point_band_reproduces_single_level(self):
        s = band_edge()
        fam = op.PMFamily(phi=(0.05, 1.0), tau=(1.0, 10.0))
        plain = op.optimize(op.ControlProblem(s, fam, grid=12))
        banded = op.optimize(op.ControlProblem(s, fam, band=op.Band.single(0.1), band_objective="rate", grid=12))
        assert banded.value == plain.value
        assert banded.params == plain.params

    def test_all_invalid(self):
        with pytest.raises(op.InfeasibleProblem) as exc:
            op.optimize(op.ControlProblem(band_edge(C=1.0), op.PMFamily(tau=(1.0, 2.0)), grid=4))
        assert len(exc.value.validity_map) == 16

    def test_problem_validation(self):
        with pytest.raises(op.OptimizationError):
            op.ControlProblem(band_edge(), op.PMFamily(), objective="median")
        with pytest.raises(op.OptimizationError):
            op.ControlProblem(band_edge(), op.PMFamily(), band=op.Band.single(0.1))
        with pytest.raises(op.OptimizationError):
            op.ControlProblem(band_edge(), op.PMFamily(tau=(3.0, 1.0)))

    def test_result_dict(self):
        res = op.optimize(op.ControlProblem(band_edge(C=1.0), op.FreeHarmonics([-0.2, 0.0])))
        d = res.as_dict()
        assert d["value"] == 0.0
        assert d["weights"] == [1.0, 0.0]
        assert d["improvement"] == math.inf


class TestCompareSchemes:
    SCHEMES = {"pm0.1": op.pm_scheme(0.1), "pmpi": op.pm_scheme(math.pi), "measurement": op.measurement_scheme()}

    def test_flat_all_one(self):
        s = sp.CouplingSpectrum(sp.FlatCutoff(0.1, math.inf, -math.inf), 0.0)
        table = op.compare_schemes(s, self.SCHEMES, [1.0, 5.0, 20.0])
        assert np.all(np.abs(table.ratios - 1.0) <= table.bounds + 1e-9)
        assert np.allclose(table.column("measurement"), 1.0, rtol=1e-6)

    def test_lorentzian_pi_beats_small_phi_at_small_tau(self):
        # [DERIVED] direct evaluation with omega_a on the peak centre
        s = sp.CouplingSpectrum(sp.LorentzianPeak(1e-3, 0.0, 1.0), 0.0)
        table = op.compare_schemes(s, self.SCHEMES, [0.5, 1.0, 2.0])
        assert np.all(table.column("pmpi") < table.column("pm0.1"))

    def test_rows(self):
        s = band_edge()
        table = op.compare_schemes(s, self.SCHEMES, [2.0])
        (tau, row), = list(table.rows())
        assert tau == 2.0
        rgr = sp.golden_rule_rate(s)
        h = md.harmonic_decomposition(md.ImpulsivePM(0.1, 2.0), 4096)
        assert row["pm0.1"] == re.longtime_rate(s, h) / rgr

    def test_am_scheme(self):
        m = op.am_scheme(0.1)(2.0)
        assert (m.tau_on, m.period) == (2.0, 20.0)
