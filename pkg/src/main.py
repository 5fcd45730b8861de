"""CLI entry point for SIR distribution analysis and simulation."""

import argparse
import dataclasses
import logging
import math
import sys
import time
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import load_dotenv

from . import analytic
from .figures import generate_figures
from .models import (
    FIGURE_PANELS,
    Command,
    EfirMethod,
    ExperimentSpec,
    FadingModel,
    FigureSettings,
    NetworkKind,
    NetworkModel,
    ResultTable,
    SimConfig,
)
from .montecarlo import (
    asappp,
    estimate_efir,
    estimate_misr_n,
    estimate_scaled_ccdf,
    estimate_sir_ccdf,
    gain_curve,
    gain_extremes,
)
from .paths import default_workers, get_output_dir
from .pointprocess import TruncationError
from .rdp import poisson_approx_ps
from .report import ReportFormatError, build_metadata, load_metadata, write_table
from .specialfn import DomainError

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(levelname)s - %(message)s",
    datefmt="%H:%M:%S",
)
logger = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_TRUNCATION = 4

SAMPLES_DEFAULT = 1_000_000
EFIR_SAMPLES_DEFAULT = 100_000

GRID_OPTIONS = ("--theta-db",)

DEFAULTS: dict[str, Any] = {
    "model": NetworkKind.PPP.value,
    "alpha": 4.0,
    "intensity": 1.0,
    "fading": "rayleigh",
    "m": 1,
    "n": 1,
    "max_n": 10,
    "samples": None,
    "efir_samples": None,
    "seed": 0,
    "workers": None,
    "theta_db": None,
    "theta_min_db": -10.0,
    "theta_max_db": 30.0,
    "grid_points": 81,
    "truncation_eps": 1e-3,
    "palm_first_shape": 2,
    "gain": None,
    "panels": list(FIGURE_PANELS),
    "alphas": [3.0, 3.5, 4.0, 4.5, 5.0],
    "output": None,
    "format": "csv",
}


class UsageError(Exception):
    """Malformed command-line input."""

    pass


def parse_count(value: str) -> int:
    """Parse a sample count, accepting forms like 1e6."""
    try:
        count = float(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from e
    if not count.is_integer() or count < 1:
        raise argparse.ArgumentTypeError(f"not a positive integer: {value!r}")
    return int(count)


def parse_theta_db(spec: str) -> np.ndarray:
    """Parse a 'min:step:max' dB grid into linear thresholds."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise UsageError(f"Theta grid must be min:step:max in dB, got {spec!r}")
    try:
        lo, step, hi = (float(p) for p in parts)
    except ValueError as e:
        raise UsageError(f"Theta grid must be numeric, got {spec!r}") from e
    if not step > 0 or hi < lo:
        raise UsageError(f"Theta grid needs step > 0 and max >= min, got {spec!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return analytic.from_db(lo + step * np.arange(count))


def theta_grid(params: dict[str, Any]) -> np.ndarray:
    """Linear threshold grid from either --theta-db or the min/max/points triple."""
    if params["theta_db"]:
        return parse_theta_db(params["theta_db"])
    lo, hi, points = params["theta_min_db"], params["theta_max_db"], params["grid_points"]
    if points < 1 or hi < lo or (points == 1 and hi != lo):
        raise UsageError(f"Invalid grid: {lo} dB to {hi} dB with {points} points")
    return analytic.from_db(np.linspace(lo, hi, points))


def resolve_params(spec: ExperimentSpec) -> dict[str, Any]:
    """Fill defaults so that the metadata records the complete configuration."""
    params = dict(DEFAULTS)
    params.update({k: v for k, v in spec.params.items() if v is not None})
    if params["fading"] == "rayleigh":
        params["m"] = 1
    if params["samples"] is None:
        efir_only = spec.command == Command.EFIR
        params["samples"] = EFIR_SAMPLES_DEFAULT if efir_only else SAMPLES_DEFAULT
    if params["efir_samples"] is None:
        params["efir_samples"] = min(params["samples"], EFIR_SAMPLES_DEFAULT)
    if params["workers"] is None:
        params["workers"] = default_workers()
    return params


def _fading(params: dict[str, Any]) -> FadingModel | None:
    if params["fading"] == "none":
        return None
    if params["fading"] not in ("rayleigh", "nakagami"):
        raise UsageError(f"Unknown fading {params['fading']!r}")
    return FadingModel(int(params["m"]))


def _sim_config(params: dict[str, Any], samples: int | None = None, grid=None) -> SimConfig:
    try:
        kind = NetworkKind(params["model"])
    except ValueError as e:
        raise UsageError(f"Unknown model {params['model']!r}") from e
    return SimConfig(
        model=NetworkModel(kind, float(params["intensity"])),
        fading=_fading(params),
        alpha=float(params["alpha"]),
        samples=params["samples"] if samples is None else samples,
        seed=int(params["seed"]),
        theta_grid=np.array([1.0]) if grid is None else grid,
        truncation_eps=float(params["truncation_eps"]),
        workers=int(params["workers"]),
        palm_first_shape=int(params["palm_first_shape"]),
    )


def _delta(params: dict[str, Any]) -> float:
    alpha = float(params["alpha"])
    if not alpha > 2:
        raise DomainError(f"Path loss exponent must exceed 2, got {alpha}")
    return 2.0 / alpha


def _reference_misr(params: dict[str, Any], n: int) -> float:
    fading = _fading(params) or analytic.RAYLEIGH
    return analytic.gen_misr_ppp(n, _delta(params), fading)


def cmd_ps_ppp(params: dict[str, Any]) -> ResultTable:
    """Analytic PPP success probability under Rayleigh fading."""
    delta = _delta(params)
    alpha = float(params["alpha"])
    theta = theta_grid(params)
    p_s = analytic.ps_ppp_rayleigh(theta, delta)
    poisson = [poisson_approx_ps(t, delta) for t in theta]
    jensen = analytic.jensen_bound(theta, analytic.misr_ppp(alpha))
    rows = np.column_stack([analytic.db(theta), theta, p_s, poisson, jensen])
    return ResultTable(["theta_db", "theta", "p_s", "p_poisson", "jensen_bound"], rows.tolist())


def cmd_misr(params: dict[str, Any]) -> ResultTable:
    """Simulated generalized MISR with the PPP reference and the implied gain."""
    n = int(params["n"])
    est = estimate_misr_n(_sim_config(params), n)
    half = 1.96 * est.misr_n / n * est.std_err / est.mean_power_n
    reference = _reference_misr(params, n)
    g0 = analytic.g0(n, est.misr_n, reference)
    logger.info(f"MISR_{n} = {est.misr_n:.6g} +/- {half:.2g}, G0 = {analytic.db(g0):.3f} dB")
    return ResultTable(
        ["n", "misr_n", "half_width", "mean_isr_n", "std_err", "misr_n_ppp", "g0", "g0_db"],
        [[n, est.misr_n, half, est.mean_power_n, est.std_err, reference, g0, analytic.db(g0)]],
    )


def cmd_gen_misr(params: dict[str, Any]) -> ResultTable:
    """Generalized MISR of the PPP with bounds and asymptotes for n = 1..max_n."""
    delta = _delta(params)
    fading = _fading(params) or analytic.RAYLEIGH
    rows = []
    for n in range(1, int(params["max_n"]) + 1):
        lower = small = large = math.nan
        if n >= 2:
            lower, small, large = analytic.gen_misr_bounds(n, delta, fading)
        large_n = analytic.misr_n_large_n_asymptote(n, delta) if delta >= 0.5 else math.nan
        rows.append([n, analytic.gen_misr_ppp(n, delta, fading), lower, small, large, large_n])
    slope = analytic.misr_n_limit_slope(delta, fading)
    return ResultTable(
        ["n", "misr_n", "lower_bound", "small_delta", "large_delta", "large_n"],
        rows,
        {"limit_slope": slope},
    )


def cmd_efir(params: dict[str, Any]) -> ResultTable:
    """EFIR by every method available for the model, plus its Monte Carlo estimate."""
    cfg = _sim_config(params)
    delta = cfg.delta
    fading = cfg.fading or analytic.RAYLEIGH
    results = []
    if cfg.model.kind == NetworkKind.PPP:
        results.append(analytic.efir_ppp(delta))
    elif cfg.model.kind == NetworkKind.SQUARE and fading.is_rayleigh:
        results.append(analytic.lattice_efir_bounds(delta))
    elif cfg.model.kind == NetworkKind.GINIBRE:
        results.append(
            analytic.efir_ginibre(delta, fading, first_shape=cfg.palm_first_shape)
        )
    results.append(estimate_efir(cfg))

    rows = [
        [
            float(list(EfirMethod).index(r.method)),
            r.value,
            r.power(delta),
            math.nan if r.lower is None else r.lower,
            math.nan if r.upper is None else r.upper,
            math.nan if r.std_err is None else r.std_err,
            analytic.g_infty(r.value, delta),
        ]
        for r in results
    ]
    return ResultTable(
        ["method", "efir", "efir_delta", "lower", "upper", "std_err", "g_infty"],
        rows,
        {"methods": [r.method.value for r in results]},
    )


def cmd_simulate(params: dict[str, Any]) -> ResultTable:
    """Simulated success probability with its confidence band."""
    cfg = _sim_config(params, grid=theta_grid(params))
    est = estimate_sir_ccdf(cfg)
    rows = np.column_stack(
        [
            est.theta_db,
            est.p_hat,
            est.half_width,
            est.exceedances,
            est.reliable.astype(float),
            analytic.ps_ppp_rayleigh(est.theta_grid, cfg.delta),
            estimate_scaled_ccdf(est, cfg.delta),
        ]
    )
    return ResultTable(
        ["theta_db", "p_hat", "half_width", "exceedances", "reliable", "p_ppp", "scaled"],
        rows.tolist(),
    )


def _g0(params: dict[str, Any], cfg: SimConfig) -> float:
    m = 1 if cfg.fading is None else cfg.fading.m
    return analytic.g0(m, estimate_misr_n(cfg, m).misr_n, _reference_misr(params, m))


def _g_inf(cfg: SimConfig, efir_samples: int) -> float:
    if cfg.model.kind == NetworkKind.PPP:
        return 1.0
    if cfg.model.kind == NetworkKind.GINIBRE:
        fading = cfg.fading or analytic.RAYLEIGH
        efir = analytic.efir_ginibre(cfg.delta, fading, first_shape=cfg.palm_first_shape)
    else:
        efir = estimate_efir(dataclasses.replace(cfg, samples=efir_samples))
    return analytic.g_infty(efir.value, cfg.delta)


def cmd_gains(params: dict[str, Any]) -> ResultTable:
    """Gain curve G(theta) with the asymptotic gains G0 and G_inf."""
    cfg = _sim_config(params, grid=theta_grid(params))
    curve = gain_curve(estimate_sir_ccdf(cfg), cfg.delta)
    m = cfg.fading.m if cfg.fading else 1
    report = analytic.gain_report(
        _g0(params, cfg), _g_inf(cfg, int(params["efir_samples"])), m
    )
    meta = {"g0": report.g0, "g_inf": report.g_inf}
    if curve:
        meta["g_min"], meta["g_max"] = gain_extremes(curve)
    rows = [[analytic.db(t), analytic.db(g), report.g0_db, report.g_inf_db] for t, g in curve]
    return ResultTable(["theta_db", "g_db", "g0_db", "ginf_db"], rows, meta)


def cmd_asappp(params: dict[str, Any]) -> ResultTable:
    """Shifted PPP approximation against the simulated success probability."""
    cfg = _sim_config(params, grid=theta_grid(params))
    gain = params["gain"]
    if gain is None:
        gain = _g0(params, cfg)
    est = estimate_sir_ccdf(cfg)
    approx = asappp(est.theta_grid, float(gain), cfg.delta)
    error = np.abs(approx - est.p_hat)
    logger.info(f"ASAPPP with G = {analytic.db(gain):.3f} dB, max error {error.max():.4f}")
    rows = np.column_stack([est.theta_db, est.p_hat, approx, error])
    return ResultTable(
        ["theta_db", "p_hat", "asappp", "abs_error"],
        rows.tolist(),
        {"gain": float(gain), "max_abs_error": float(error.max())},
    )


def cmd_figures(params: dict[str, Any]) -> ResultTable:
    """Write the figure data files and the gnuplot script."""
    settings = FigureSettings(
        samples=int(params["samples"]),
        efir_samples=int(params["efir_samples"]),
        seed=int(params["seed"]),
        workers=int(params["workers"]),
        alphas=tuple(params["alphas"]),
        panels=tuple(params["panels"]),
    )
    output_dir = Path(params["output"]) if params["output"] else get_output_dir()
    written = generate_figures(settings, output_dir, params, params["format"])
    rows = [[float(p)] for p in settings.panels]
    return ResultTable(["panel"], rows, {"files": {k: str(v) for k, v in written.items()}})


COMMANDS: dict[Command, Callable[[dict[str, Any]], ResultTable]] = {
    Command.PS_PPP: cmd_ps_ppp,
    Command.MISR: cmd_misr,
    Command.GEN_MISR: cmd_gen_misr,
    Command.EFIR: cmd_efir,
    Command.SIMULATE: cmd_simulate,
    Command.GAINS: cmd_gains,
    Command.ASAPPP: cmd_asappp,
    Command.FIGURES: cmd_figures,
}


def run(spec: ExperimentSpec) -> tuple[ResultTable | None, int]:
    """Execute one experiment and write its table.

    Returns:
        The result table (None on failure) and the process exit code.
    """
    start = time.perf_counter()
    params = resolve_params(spec)
    logger.info(
        f"Running {spec.command.value}: model={params['model']}, alpha={params['alpha']}"
    )

    try:
        table = COMMANDS[spec.command](params)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return None, EXIT_USAGE
    except TruncationError as e:
        logger.error(f"Truncation error: {e}")
        return None, EXIT_TRUNCATION
    except DomainError as e:
        logger.error(f"Domain error: {e}")
        return None, EXIT_DOMAIN

    table.metadata = build_metadata(
        spec.command.value, params, elapsed=time.perf_counter() - start, **table.metadata
    )
    if spec.command != Command.FIGURES:
        output = Path(params["output"]) if params["output"] else None
        text = write_table(table, output, params["format"])
        if output is None:
            print(text, end="" if text.endswith("\n") else "\n")
    return table, 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        choices=[k.value for k in NetworkKind],
        help="Base station process (default: ppp)",
    )
    parser.add_argument("--alpha", type=float, help="Path loss exponent (default: 4)")
    parser.add_argument(
        "--lambda", dest="intensity", type=float, help="Base station intensity (default: 1)"
    )
    parser.add_argument(
        "--fading",
        choices=["rayleigh", "nakagami", "none"],
        help="Fading law (default: rayleigh)",
    )
    parser.add_argument("--m", type=int, help="Nakagami parameter (default: 1)")
    parser.add_argument("--samples", type=parse_count, help="Monte Carlo sample count, e.g. 1e6")
    parser.add_argument("--seed", type=int, help="Master seed (default: 0)")
    parser.add_argument(
        "--workers", type=int, help="Worker threads (default: $ASAPPP_WORKERS or 1)"
    )
    parser.add_argument("--theta-db", help="Threshold grid in dB as min:step:max")
    parser.add_argument("--theta-min-db", type=float, help="Smallest threshold in dB")
    parser.add_argument("--theta-max-db", type=float, help="Largest threshold in dB")
    parser.add_argument("--grid-points", type=int, help="Number of grid thresholds")
    parser.add_argument("--truncation-eps", type=float, help="Truncation tolerance (default: 1e-3)")
    parser.add_argument(
        "--palm-first-shape",
        type=int,
        choices=[1, 2],
        help="First Gamma shape of the Ginibre Palm radii (default: 2)",
    )
    parser.add_argument("-o", "--output", help="Output file (directory for figures)")
    parser.add_argument("--format", choices=["csv", "json"], help="Output format (default: csv)")
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Enable verbose output",
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment."""
    parser = argparse.ArgumentParser(
        description="SIR distributions of cellular networks and the ASAPPP approximation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--replay",
        metavar="PATH",
        help="Re-run the configuration stored in a CSV or JSON output",
    )
    parser.add_argument("-o", "--output", dest="replay_output", help="Output file for --replay")
    parser.add_argument("-v", "--verbose", action="store_true", help="Enable verbose output")
    subparsers = parser.add_subparsers(dest="command", help="Commands")

    helps = {
        Command.PS_PPP: "Analytic PPP success probability",
        Command.MISR: "Simulated (generalized) MISR and G0",
        Command.GEN_MISR: "Generalized MISR of the PPP with bounds",
        Command.EFIR: "Expected fading-to-interference ratio",
        Command.SIMULATE: "Simulated success probability",
        Command.GAINS: "Gain curve G(theta) with G0 and G_inf",
        Command.ASAPPP: "Shifted PPP approximation against simulation",
        Command.FIGURES: "Figure data files and gnuplot script",
    }
    subs = {}
    for command, text in helps.items():
        subs[command] = subparsers.add_parser(command.value, help=text)
        _add_common(subs[command])

    subs[Command.MISR].add_argument("--n", type=int, help="Moment order (default: 1)")
    subs[Command.GEN_MISR].add_argument("--max-n", type=int, help="Largest order (default: 10)")
    subs[Command.ASAPPP].add_argument("--gain", type=float, help="Gain G (default: simulated G0)")
    for command in (Command.GAINS, Command.FIGURES):
        subs[command].add_argument(
            "--efir-samples", type=parse_count, help="EFIR sample count (default: 1e5)"
        )
    subs[Command.FIGURES].add_argument(
        "--panels", type=int, nargs="+", choices=FIGURE_PANELS, help="Figures to compute"
    )
    subs[Command.FIGURES].add_argument(
        "--alphas", type=float, nargs="+", help="Path loss exponents of the gain sweeps"
    )
    return parser


def attach_grid_values(argv: list[str]) -> list[str]:
    """Rewrite '--theta-db -10:1:30' as '--theta-db=-10:1:30'.

    argparse takes a value starting with '-' that is not a plain number for
    an option flag, so negative dB grids must be attached to their option.
    """
    out: list[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token in GRID_OPTIONS:
            value = next(tokens, None)
            if value is None or value.startswith("--"):
                out.append(token)
                if value is not None:
                    out.append(value)
                continue
            token = f"{token}={value}"
        out.append(token)
    return out


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    params = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "replay", "replay_output", "verbose") and v is not None
    }
    return ExperimentSpec(Command(args.command), params)


def spec_from_replay(path: Path, output: str | None) -> ExperimentSpec:
    """Experiment stored in the metadata of an earlier output."""
    metadata = load_metadata(path)
    params = dict(metadata["params"])
    params["output"] = output
    logger.info(f"Replaying {metadata['command']} from {path}")
    return ExperimentSpec(Command(metadata["command"]), params)


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(attach_grid_values(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        if args.replay:
            spec = spec_from_replay(Path(args.replay), args.replay_output)
        elif args.command is None:
            parser.print_help()
            return EXIT_USAGE
        else:
            spec = spec_from_args(args)
        _, code = run(spec)
        return code
    except (UsageError, ReportFormatError) as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("\n\nInterrupted by user. Exiting gracefully...")
        return 130  # Standard exit code for SIGINT


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nInterrupted by user.")
        sys.exit(130)
