import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from decayctl import cli
from decayctl import config as cf
from decayctl import modulation as md
from decayctl import optimizer as op
from decayctl import rate_engine as re
from decayctl.textio import format_number


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write(tmp_path, text, name="exp.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestExitCodes:
    def test_list_presets(self, capsys):
        code, out, _ = run(capsys, "list-presets")
        assert code == 0
        names = [line.split("\t")[0] for line in out.splitlines()]
        for n in ("fig1b", "fig2-qze", "fig2-aze", "validate-weak", "validate-strong", "validate-zero"):
            assert n in names

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["rate", "--format", "xml"])
        assert exc.value.code == 1
        with pytest.raises(SystemExit) as exc:
            cli.main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_config(self, capsys):
        code, _, err = run(capsys, "rate", "--config", "/nonexistent/x.ini")
        assert code == 2
        assert "does not exist" in err

    def test_no_source(self, capsys):
        assert run(capsys, "rate")[0] == 2

    def test_unknown_preset(self, capsys):
        assert run(capsys, "rate", "--preset", "nope")[0] == 2

    def test_bad_parameter(self, capsys, tmp_path):
        p = write(tmp_path, "[spectrum]\nmodel = flat\nG_0 = 1\nbogus = 3\nomega_a = 0\n[time]\nvalues = 1\n")
        code, _, err = run(capsys, "rate", "--config", p)
        assert code == 2
        assert "bogus" in err

    def test_decreasing_times(self, capsys, tmp_path):
        p = write(tmp_path, "[spectrum]\nmodel = flat\nG_0 = 1\nomega_cut = 5\nomega_a = 0\n[time]\nvalues = 2, 1\n")
        assert run(capsys, "rate", "--config", p)[0] == 2

    def test_numeric_failure(self, capsys, tmp_path):
        # step too coarse for the modulation
        p = write(tmp_path, "[spectrum]\nmodel = lorentzian\ng = 0.001\nomega_0 = 0\nw = 1\nomega_a = 0\n"
                            "[modulation]\nscheme = pm\nphi = 0.5\ntau = 1\n[validate]\nhorizon = 10\nstep = 0.2\n")
        code, _, err = run(capsys, "validate", "--config", p)
        assert code == 3
        assert "numerical failure" in err

    def test_strict_validity(self, capsys, tmp_path):
        p = write(tmp_path, "[spectrum]\nmodel = band_edge\nC = 1\nGamma = 1\nomega_a = 0.1\n[time]\nvalues = 0, 1\n")
        assert run(capsys, "rate", "--config", p)[0] == 0
        code, out, err = run(capsys, "rate", "--config", p, "--strict-validity")
        assert code == 3
        assert rows(out)[1]["validity"] == "flagged"


class TestRate:
    def test_flat_constant(self, capsys):
        code, out, _ = run(capsys, "rate", "--preset", "flat-constant")
        assert code == 0
        table = rows(out)
        t = np.array([float(r["t"]) for r in table])
        P = np.array([float(r["P"]) for r in table])
        assert np.allclose(P, np.exp(-2 * math.pi * 0.01 * t), rtol=0, atol=1e-6)
        assert table[0]["R"] == "nan"

    def test_fig1b_matches_library(self, capsys):
        code, out, _ = run(capsys, "rate", "--preset", "fig1b")
        assert code == 0
        cfg = cf.load_config(preset="fig1b")
        assert cfg.modulation == md.ImpulsivePM(0.1, 5.0)
        curve = re.survival_curve(cfg.spectrum, cfg.modulation, cfg.times)
        expect = [[format_number(v) for v in (t, q, r, p, curve.validity.ratio)] + [curve.validity.tier]
                  for t, q, r, p in curve.samples]
        got = [list(r.values()) for r in rows(out)]
        assert got == expect

    def test_json_format(self, capsys):
        code, out, _ = run(capsys, "rate", "--preset", "flat-constant", "--format", "json")
        data = json.loads(out)
        assert data[0]["R"] == "nan"
        assert data[-1]["t"] == 20

    def test_out_file(self, capsys, tmp_path):
        dest = tmp_path / "out.csv"
        code, out, _ = run(capsys, "rate", "--preset", "flat-constant", "--out", str(dest))
        assert code == 0 and out == ""
        assert dest.read_text().startswith("t,Q,R,P")

    def test_preset_overlay(self, capsys, tmp_path):
        p = write(tmp_path, "[spectrum]\nG_0 = 0.02\n")
        code, out, _ = run(capsys, "rate", "--preset", "flat-constant", "--config", p)
        last = rows(out)[-1]
        assert float(last["P"]) == pytest.approx(math.exp(-2 * math.pi * 0.02 * 20), abs=1e-6)

    @pytest.mark.parametrize("mod_preset,ref_preset,sign", [("fig2-qze", "fig2-unmodulated", 1),
                                                            ("fig2-aze", "fig2-aze-unmodulated", -1)])
    def test_fig2_signs(self, capsys, mod_preset, ref_preset, sign):
        P = {}
        for name in (mod_preset, ref_preset):
            code, out, _ = run(capsys, "rate", "--preset", name)
            assert code == 0
            table = rows(out)
            assert float(table[-1]["Q"]) == pytest.approx(10.0, rel=1e-12)
            assert all(r["validity"] != "flagged" for r in table)
            P[name] = float(table[-1]["P"])
        assert sign * (P[mod_preset] - P[ref_preset]) > 0

    def test_lattice_metadata(self):
        cfg = cf.load_config(preset="fig2-qze")
        assert cfg.meta["lattice_omega_g_T"] == pytest.approx(2.05, abs=0.01)
        cfg = cf.load_config(preset="fig2-aze")
        assert cfg.meta["lattice_omega_g_T"] == pytest.approx(3.32, abs=0.01)


class TestSweep:
    def test_flat_column_one(self, capsys):
        # every entry is 1 up to the weight of the harmonics dropped by the truncation
        code, out, _ = run(capsys, "sweep", "--preset", "flat-constant")
        assert code == 0
        cfg = cf.load_config(preset="flat-constant")
        names = ["pm:0.1", "pm:pi", "am:0.5", "measurement"]
        table = op.compare_schemes(cfg.spectrum, {n: cli._scheme(n) for n in names}, [1, 2, 5], 4096)
        for r, bound in zip(rows(out), table.bounds):
            for name, b in zip(names, bound):
                assert abs(float(r[name]) - 1.0) <= b + 1e-9

    def test_fig1b_matches_library(self, capsys):
        code, out, _ = run(capsys, "sweep", "--preset", "fig1b")
        cfg = cf.load_config(preset="fig1b")
        table = op.compare_schemes(cfg.spectrum, {"pm:0.1": op.pm_scheme(0.1), "pm:pi": op.pm_scheme(math.pi),
                                                  "measurement": op.measurement_scheme()},
                                   [1, 2, 5, 10, 20, 30], 4096)
        got = rows(out)
        for (tau, expect), r in zip(table.rows(), got):
            assert r["tau"] == format_number(tau)
            assert [r[k] for k in ("pm:0.1", "pm:pi", "measurement")] == [format_number(expect[k]) for k in expect]

    def test_threads_identical(self, capsys):
        _, one, _ = run(capsys, "sweep", "--preset", "fig1b")
        _, many, _ = run(capsys, "sweep", "--preset", "fig1b", "--threads", "3")
        assert one == many

    def test_empty_range(self, capsys, tmp_path):
        base = "[spectrum]\nmodel = band_edge\nC = 1e-3\nomega_a = 0.1\n"
        for sweep in ("[sweep]\nstart = 1\nstop = 2\ncount = 0\n", "[sweep]\nvalues =\n"):
            code, _, err = run(capsys, "sweep", "--config", write(tmp_path, base + sweep))
            assert code == 1
            assert "empty" in err

    def test_bad_scheme(self, capsys, tmp_path):
        p = write(tmp_path, "[sweep]\nschemes = pm:0.1, wobble\n")
        assert run(capsys, "sweep", "--preset", "fig1b", "--config", p)[0] == 2


class TestOptimize:
    def test_free_vertex(self, capsys):
        code, out, _ = run(capsys, "optimize", "--preset", "optimize-free")
        assert code == 0
        data = json.loads(out)
        assert data["params"]["omega_k"] == -0.2
        assert data["value"] == 0
        assert data["weights"] == [1, 0, 0]

    def test_single_point_band(self, capsys, tmp_path):
        p = write(tmp_path, "[optimize]\nband = 0.1:1\nband_objective = rate\n")
        code, out, _ = run(capsys, "optimize", "--preset", "optimize-free", "--config", p)
        assert code == 0
        assert json.loads(out)["params"]["omega_k"] == -0.2

    def test_pm(self, capsys):
        code, out, _ = run(capsys, "optimize", "--preset", "optimize-pm")
        assert code == 0
        data = json.loads(out)
        assert data["validity_ratio"] <= 0.1
        assert data["improvement"] > 1

    def test_infeasible(self, capsys, tmp_path):
        p = write(tmp_path, "[spectrum]\nC = 1\n[optimize]\nomegas = 0, 0.2\n")
        code, out, err = run(capsys, "optimize", "--preset", "optimize-free", "--config", p)
        assert code == 3
        vmap = json.loads(out)["validity_map"]
        assert len(vmap) == 2 and all(r > 0.1 for _, r in vmap)

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "optimize", "--preset", "optimize-free", "--format", "csv")
        table = {r["key"]: r["value"] for r in rows(out)}
        assert table["param_omega_k"] == "-0.2"


class TestValidate:
    def test_zero(self, capsys):
        code, out, _ = run(capsys, "validate", "--preset", "validate-zero")
        assert code == 0
        assert json.loads(out)["max_deviation"] == 0

    def test_weak(self, capsys):
        code, out, err = run(capsys, "validate", "--preset", "validate-weak")
        data = json.loads(out)
        assert code == 0
        assert data["passed"] and data["max_deviation"] < 0.02
        assert err == ""

    def test_strong_warns(self, capsys):
        code, out, err = run(capsys, "validate", "--preset", "validate-strong")
        data = json.loads(out)
        assert code == 0
        assert data["regime"] == "flagged"
        assert not data["passed"]
        assert "warning" in err


class TestReproducibility:
    @pytest.mark.parametrize("argv", [["rate", "--preset", "fig2-qze"], ["sweep", "--preset", "fig1b"],
                                      ["optimize", "--preset", "optimize-free"]])
    def test_byte_identical(self, tmp_path, argv):
        outs = []
        for i in range(2):
            dest = tmp_path / f"run{i}"
            subprocess.run([sys.executable, "-m", "decayctl.cli", *argv, "--out", str(dest)], check=True)
            outs.append(dest.read_bytes())
        assert outs[0] == outs[1]
        assert b"," in outs[0] or b"{" in outs[0]

    def test_twelve_digits(self, capsys):
        _, out, _ = run(capsys, "rate", "--preset", "fig1b")
        for r in rows(out)[1:]:
            mant = r["P"].split("e")[0].replace(".", "").replace("-", "").lstrip("0")
            assert len(mant) <= 12


class TestUnits:
    @given(st.floats(1e-6, 1e6), st.floats(-1e9, 1e9), st.sampled_from([-1, 0, 0.5, 1, 2]))
    def test_round_trip(self, freq, value, dim):
        u = cf.Units(freq)
        back = u.to_physical(u.to_internal(value, dim), dim)
        assert back == pytest.approx(value, rel=1e-10, abs=1e-300)

    def test_cli_round_trip(self, capsys, tmp_path):
        p = write(tmp_path, "[units]\nfrequency = 2*pi*0.091\n[spectrum]\nmodel = lorentzian\ng = 1e-5\n"
                            "omega_0 = 0.3\nw = 0.2\nomega_a = 0.25\n[time]\nvalues = 0.5, 3.7, 11.1\n")
        _, out, _ = run(capsys, "rate", "--config", p)
        t = [float(r["t"]) for r in rows(out)]
        assert t == pytest.approx([0.5, 3.7, 11.1], rel=1e-10)

    def test_physical_rate_scaling(self, capsys, tmp_path):
        # a flat spectrum gives R = 2 pi G_0 in the physical unit whatever the reference frequency
        for freq in ("1", "7.5"):
            p = write(tmp_path, f"[units]\nfrequency = {freq}\n[spectrum]\nmodel = flat\nG_0 = 0.003\n"
                                "omega_cut = inf\nomega_low = -inf\nomega_a = 0\n[time]\nvalues = 1, 2\n")
            _, out, _ = run(capsys, "rate", "--config", p)
            assert float(rows(out)[1]["R"]) == pytest.approx(2 * math.pi * 0.003, rel=1e-9)

    def test_parse_number(self):
        assert cf.parse_number("2*pi*0.091") == pytest.approx(2 * math.pi * 0.091)
        assert cf.parse_number("-inf") == -math.inf
        with pytest.raises(cf.ConfigError):
            cf.parse_number("__import__('os')")
