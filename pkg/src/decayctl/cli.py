"""decayctl command line: rate, sweep, optimize, validate, list-presets.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 numerical
failure (including a flagged validity ratio under --strict-validity).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import modulation as mod_
from . import optimizer as opt
from . import rate_engine as rates
from . import spectra, volterra
from .config import ConfigError, ExperimentConfig, list_presets, load_config, parse_number
from .textio import format_number, write_csv

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _json_value(x):
    if isinstance(x, dict):
        return {k: _json_value(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_json_value(v) for v in x]
    if isinstance(x, (bool, np.bool_)) or x is None or isinstance(x, str):
        return bool(x) if isinstance(x, np.bool_) else x
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return format_number(x)
    return float(format_number(x))


def _dump_json(obj) -> str:
    return json.dumps(_json_value(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table(header, rows, fmt: str) -> str:
    if fmt == "json":
        return _dump_json([dict(zip(header, r)) for r in rows])
    return write_csv(rows, header)


# --------------------------------------------------------------------- rate


def run_rate(cfg: ExperimentConfig, args) -> tuple[str, bool]:
    if cfg.times is None:
        raise ConfigError("[time] section is required for 'rate'")
    m = cfg.modulation
    sec = cfg.section("rate")
    method = sec.get("method", "finite-window").strip()
    rtol = parse_number(sec.get("rtol", "1e-6"))
    K = int(sec.get("K", str(mod_.DEFAULT_K)))
    times = cfg.times
    if cfg.axis == "coupling":
        # values are total coupling times Q; convert each to elapsed time
        if m.time_domain:
            times = np.array([mod_.time_for_fluence(m, q) for q in cfg.times])
        else:
            times = cfg.times / m.intensity
    curve = rates.survival_curve(cfg.spectrum, m, times, method=method, rtol=rtol, K=K)
    u = cfg.units
    rows = [
        (u.to_physical(t, -1), u.to_physical(q, -1), u.to_physical(r, 1), p, curve.validity.ratio, curve.validity.tier)
        for t, q, r, p in curve.samples
    ]
    header = ("t", "Q", "R", "P", "validity_ratio", "validity")
    return _table(header, rows, args.format or "csv"), curve.validity.flagged


# -------------------------------------------------------------------- sweep


def _scheme(spec: str):
    kind, _, arg = spec.strip().partition(":")
    if kind == "pm":
        return opt.pm_scheme(parse_number(arg))
    if kind == "am":
        return opt.am_scheme(parse_number(arg))
    if kind == "measurement":
        return opt.measurement_scheme()
    raise ConfigError(f"[sweep] unknown scheme {spec!r} (use pm:PHI, am:DUTY or measurement)")


def run_sweep(cfg: ExperimentConfig, args) -> tuple[str, bool]:
    sec = cfg.section("sweep")
    if not sec:
        raise ConfigError("[sweep] section is required for 'sweep'")
    if sec.get("parameter", "tau").strip() != "tau":
        raise ConfigError("[sweep] parameter must be 'tau'")
    if "values" in sec:
        taus = cfg.numbers("sweep", "values", dim=-1)
    else:
        count = int(sec.get("count", "0"))
        if count < 1:
            raise UsageError("sweep range is empty")
        lo, hi = cfg.number("sweep", "start", -1), cfg.number("sweep", "stop", -1)
        taus = np.linspace(lo, hi, count).tolist()
    if not taus:
        raise UsageError("sweep range is empty")
    names = [s.strip() for s in sec.get("schemes", "pm:0.1, pm:pi, measurement").split(",") if s.strip()]
    schemes = {n: _scheme(n) for n in names}
    K = int(sec.get("K", "4096"))
    threads = max(1, args.threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda t: opt.compare_schemes(cfg.spectrum, schemes, [t], K), taus))
        ratios = np.vstack([p.ratios for p in parts])
    else:
        ratios = opt.compare_schemes(cfg.spectrum, schemes, taus, K).ratios
    rows = [(cfg.units.to_physical(t, -1), *r) for t, r in zip(taus, ratios.tolist())]
    return _table(("tau", *names), rows, args.format or "csv"), False


# ----------------------------------------------------------------- optimize


def _band(cfg: ExperimentConfig):
    sec = cfg.section("optimize")
    if "band_file" in sec:
        b = opt.load_band(cfg.path("optimize", "band_file"))
        return opt.Band(cfg.units.to_internal(b.omegas, 1), b.weights)
    if "band" in sec:
        pairs = [p.split(":") for p in sec["band"].split(",") if p.strip()]
        if any(len(p) != 2 for p in pairs):
            raise ConfigError("[optimize] band entries must look like omega:weight")
        w = [cfg.units.to_internal(parse_number(a), 1) for a, _ in pairs]
        return opt.Band.normalized(w, [parse_number(b) for _, b in pairs])
    return None


def _family(cfg: ExperimentConfig):
    sec = cfg.section("optimize")
    kind = sec.get("family", "").strip()

    def box(key, dim):
        vals = cfg.numbers("optimize", key, dim)
        if len(vals) != 2:
            raise ConfigError(f"[optimize] {key} needs 'low, high'")
        return tuple(vals)

    if kind == "pm":
        return opt.PMFamily(phi=box("phi", 0), tau=box("tau", -1)), {"phi": 0, "tau": -1}
    if kind == "am":
        return opt.AMFamily(tau_on=box("tau_on", -1), period=box("period", -1)), {"tau_on": -1, "period": -1}
    if kind == "monochromatic":
        return opt.MonochromaticFamily(delta=box("delta", 1)), {"delta": 1}
    if kind == "free":
        return opt.FreeHarmonics(cfg.numbers("optimize", "omegas", 1)), {"omega_k": 1, "index": 0}
    raise ConfigError("[optimize] family must be pm, am, monochromatic or free")


def run_optimize(cfg: ExperimentConfig, args) -> tuple[str, bool]:
    sec = cfg.section("optimize")
    if not sec:
        raise ConfigError("[optimize] section is required for 'optimize'")
    family, dims = _family(cfg)
    band = _band(cfg)
    t_star = cfg.number("optimize", "t_star", -1) if "t_star" in sec else None
    max_validity = sec.get("max_validity", "0.1").strip()
    try:
        problem = opt.ControlProblem(
            spectrum=cfg.spectrum,
            family=family,
            objective=sec.get("objective", "minimize").strip(),
            band=band,
            band_objective=sec.get("band_objective", "survival").strip(),
            t_star=t_star,
            K=int(sec.get("K", str(mod_.DEFAULT_K))),
            grid=int(sec.get("grid", "64")),
            max_validity=None if max_validity == "none" else parse_number(max_validity),
        )
    except opt.OptimizationError as exc:
        raise ConfigError(f"[optimize] {exc}") from None
    result = opt.optimize(problem)
    out = result.as_dict()
    u = cfg.units
    out["params"] = {k: (u.to_physical(v, dims[k]) if k != "index" else v) for k, v in result.params.items()}
    out["value"] = u.to_physical(result.value, 1)
    out["reference"] = u.to_physical(result.reference, 1)
    if args.format == "csv":
        flat = {k: v for k, v in out.items() if not isinstance(v, (dict, list))}
        flat.update({f"param_{k}": v for k, v in out["params"].items()})
        return write_csv(sorted(flat.items()), ("key", "value")), False
    return _dump_json(out), False


# ----------------------------------------------------------------- validate


def run_validate(cfg: ExperimentConfig, args) -> tuple[str, bool]:
    sec = cfg.section("validate")
    m = cfg.modulation
    samples = int(sec.get("samples", "40"))
    tolerance = parse_number(sec.get("tolerance", "0.02"))
    h = cfg.number("validate", "step", -1) if "step" in sec else None
    if "horizon" in sec:
        T = cfg.number("validate", "horizon", -1)
    else:
        hd = mod_.harmonic_decomposition(m)
        R = rates.longtime_rate(cfg.spectrum, hd) * hd.intensity
        if R <= 0:
            raise ConfigError("[validate] horizon is required when the long-time rate vanishes")
        T = parse_number(sec.get("horizon_rates", "5")) / R
    traj = volterra.solve(cfg.spectrum, m, T, h)
    n = traj.t.size - 1
    idx = np.unique(np.linspace(0, n, samples + 1).round().astype(int))
    curve = rates.survival_curve(cfg.spectrum, m, traj.t[idx])
    rep = volterra.compare_with_universal(traj, curve, tolerance)
    u = cfg.units
    out = {
        "max_deviation": rep.max_deviation,
        "mean_deviation": rep.mean_deviation,
        "tolerance": rep.tolerance,
        "passed": rep.passed,
        "validity_ratio": rep.validity_ratio,
        "regime": rep.regime,
        "step": u.to_physical(traj.h, -1),
        "horizon": u.to_physical(traj.t[-1], -1),
    }
    if not rep.passed:
        print(f"warning: oracle deviation {rep.max_deviation:.3g} exceeds {tolerance:g} "
              f"(validity ratio {rep.validity_ratio:.3g}, {rep.regime})", file=sys.stderr)
    if args.format == "csv":
        rows = [(u.to_physical(t, -1), a, b) for t, a, b in zip(rep.t, rep.oracle, rep.universal)]
        return write_csv(rows, ("t", "oracle_modulus", "universal_modulus")), rep.regime == "flagged"
    return _dump_json(out), rep.regime == "flagged"


# --------------------------------------------------------------------- main


COMMANDS = {"rate": run_rate, "sweep": run_sweep, "optimize": run_optimize, "validate": run_validate}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment INI file (overlays --preset)")
    common.add_argument("--preset", metavar="NAME", help="packaged experiment; see list-presets")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads for sweeps")
    common.add_argument("--strict-validity", action="store_true",
                        help="exit with status 3 when the validity ratio is flagged")
    parser = _Parser(prog="decayctl", description="Decay-rate control under weak temporal modulation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("rate", parents=[common], help="survival curve P(t) with rates R(t)")
    sub.add_parser("sweep", parents=[common], help="R/R_GR of several schemes over a tau grid")
    sub.add_parser("optimize", parents=[common], help="best modulation parameters (JSON)")
    sub.add_parser("validate", parents=[common], help="exact amplitude equation vs universal rate")
    sub.add_parser("list-presets", help="show packaged experiments")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list-presets":
        for name, desc in list_presets().items():
            print(f"{name}\t{desc}")
        return EXIT_OK
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        cfg = load_config(args.config, args.preset)
        text, flagged = COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"decayctl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"decayctl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"decayctl: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except opt.InfeasibleProblem as exc:
        print(f"decayctl: {exc}", file=sys.stderr)
        sys.stdout.write(_dump_json({"validity_map": [[p, r] for p, r in exc.validity_map]}))
        return EXIT_NUMERIC
    except (rates.QuadratureError, volterra.StepTooCoarse, spectra.SpectrumError,
            mod_.ModulationError, opt.OptimizationError, ArithmeticError, ValueError) as exc:
        print(f"decayctl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _emit(text, args.out)
    if flagged and args.strict_validity:
        print("decayctl: validity ratio flagged (R t_c >= 0.1)", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
