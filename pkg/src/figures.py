"""Data sets and a gnuplot script for the success probability and gain figures."""

import logging
import time
from collections.abc import Callable
from pathlib import Path

import numpy as np

from . import analytic
from .models import (
    FadingModel,
    FigureSettings,
    NetworkKind,
    NetworkModel,
    ResultTable,
    SimConfig,
)
from .montecarlo import (
    estimate_efir,
    estimate_misr_n,
    estimate_scaled_ccdf,
    estimate_sir_ccdf,
    gain_curve,
)
from .report import build_metadata, generate_csv, generate_json

logger = logging.getLogger(__name__)

ALPHA = 4.0
FIG1_GRID_DB = np.arange(-10.0, 20.0 + 0.25, 0.5)
TAIL_GRID_DB = np.arange(-10.0, 30.0 + 0.5, 1.0)
GAIN_GRID_DB = np.arange(-10.0, 30.0 + 0.5, 1.0)
SCRIPT_NAME = "figures.gp"


def _config(
    settings: FigureSettings,
    kind: NetworkKind,
    alpha: float,
    samples: int,
    grid_db: np.ndarray | None = None,
) -> SimConfig:
    grid = np.array([1.0]) if grid_db is None else analytic.from_db(grid_db)
    return SimConfig(
        model=NetworkModel(kind),
        fading=FadingModel(),
        alpha=alpha,
        samples=samples,
        seed=settings.seed,
        theta_grid=grid,
        workers=settings.workers,
    )


def _gains(settings: FigureSettings, kind: NetworkKind, alpha: float) -> tuple[float, float]:
    """(G0, G_inf) of a model from simulated MISR and EFIR; Ginibre EFIR by quadrature."""
    delta = 2.0 / alpha
    misr = estimate_misr_n(_config(settings, kind, alpha, settings.samples), 1).misr_n
    if kind == NetworkKind.GINIBRE:
        efir = analytic.efir_ginibre(delta).value
    else:
        efir = estimate_efir(_config(settings, kind, alpha, settings.efir_samples)).value
    return analytic.misr_ppp(alpha) / misr, analytic.g_infty(efir, delta)


def figure_ccdf(settings: FigureSettings) -> ResultTable:
    """PPP and triangular lattice success probabilities with the Jensen bound."""
    delta = 2.0 / ALPHA
    cfg = _config(settings, NetworkKind.TRIANGULAR, ALPHA, settings.samples, FIG1_GRID_DB)
    est = estimate_sir_ccdf(cfg)
    g0 = analytic.misr_ppp(ALPHA) / estimate_misr_n(cfg, 1).misr_n
    theta = cfg.theta_grid
    columns = np.column_stack(
        [
            FIG1_GRID_DB,
            analytic.ps_ppp_rayleigh(theta, delta),
            est.p_hat,
            analytic.jensen_bound(theta, analytic.misr_ppp(ALPHA)),
            analytic.ps_ppp_rayleigh(theta / g0, delta),
        ]
    )
    return ResultTable(
        ["theta_db", "p_ppp", "p_triangular", "jensen_bound", "asappp_triangular"],
        columns.tolist(),
        {"g0_triangular": g0},
    )


def figure_square_tail(settings: FigureSettings) -> ResultTable:
    """Scaled square lattice ccdf with its EFIR asymptote and the analytic bounds."""
    delta = 2.0 / ALPHA
    est = estimate_sir_ccdf(
        _config(settings, NetworkKind.SQUARE, ALPHA, settings.samples, TAIL_GRID_DB)
    )
    efir = estimate_efir(_config(settings, NetworkKind.SQUARE, ALPHA, settings.efir_samples))
    bounds = analytic.lattice_efir_bounds(delta)
    ones = np.ones(TAIL_GRID_DB.size)
    columns = np.column_stack(
        [
            TAIL_GRID_DB,
            estimate_scaled_ccdf(est, delta),
            ones * efir.power(delta),
            ones * bounds.lower**delta,
            ones * bounds.upper**delta,
            est.theta_grid**delta * analytic.ps_ppp_rayleigh(est.theta_grid, delta),
        ]
    )
    return ResultTable(
        ["theta_db", "scaled_sim", "efir_asymptote", "lower_bound", "upper_bound", "scaled_ppp"],
        columns.tolist(),
        {"efir": efir.value, "efir_std_err": efir.std_err},
    )


def figure_gain_curve(settings: FigureSettings, kind: NetworkKind) -> ResultTable:
    """Gain G(theta) of a lattice over the PPP with its two asymptotic levels."""
    delta = 2.0 / ALPHA
    est = estimate_sir_ccdf(_config(settings, kind, ALPHA, settings.samples, GAIN_GRID_DB))
    g0, g_inf = _gains(settings, kind, ALPHA)
    report = analytic.gain_report(g0, g_inf)
    rows = [
        [analytic.db(theta), analytic.db(g), report.g0_db, report.g_inf_db]
        for theta, g in gain_curve(est, delta)
    ]
    return ResultTable(
        ["theta_db", "g_db", "g0_db", "ginf_db"],
        rows,
        {"model": kind.value, "g0": g0, "g_inf": g_inf},
    )


def figure_lattice_gains(settings: FigureSettings) -> ResultTable:
    """G0 and G_inf of both lattices against the path loss exponent."""
    rows = []
    for alpha in settings.alphas:
        row = [alpha]
        for kind in (NetworkKind.SQUARE, NetworkKind.TRIANGULAR):
            g0, g_inf = _gains(settings, kind, alpha)
            row += [g0, analytic.db(g0), g_inf, analytic.db(g_inf)]
        rows.append(row)
    columns = ["alpha"]
    for name in ("square", "triangular"):
        columns += [f"g0_{name}", f"g0_{name}_db", f"ginf_{name}", f"ginf_{name}_db"]
    return ResultTable(columns, rows)


def figure_ginibre_tail(settings: FigureSettings) -> ResultTable:
    """Scaled Ginibre ccdf with the quadrature EFIR asymptote."""
    delta = 2.0 / ALPHA
    est = estimate_sir_ccdf(
        _config(settings, NetworkKind.GINIBRE, ALPHA, settings.samples, TAIL_GRID_DB)
    )
    efir = analytic.efir_ginibre(delta)
    columns = np.column_stack(
        [
            TAIL_GRID_DB,
            estimate_scaled_ccdf(est, delta),
            np.full(TAIL_GRID_DB.size, efir.power(delta)),
            est.theta_grid**delta * analytic.ps_ppp_rayleigh(est.theta_grid, delta),
        ]
    )
    return ResultTable(
        ["theta_db", "scaled_sim", "efir_asymptote", "scaled_ppp"],
        columns.tolist(),
        {"efir": efir.value},
    )


def figure_ginibre_gains(settings: FigureSettings) -> ResultTable:
    """Ginibre G0 and G_inf against the path loss exponent, with alpha/2 for reference."""
    rows = []
    for alpha in settings.alphas:
        g0, g_inf = _gains(settings, NetworkKind.GINIBRE, alpha)
        rows.append([alpha, g0, analytic.db(g0), g_inf, analytic.db(g_inf), alpha / 2])
    return ResultTable(["alpha", "g0", "g0_db", "ginf", "ginf_db", "half_alpha"], rows)


PANELS: dict[int, list[tuple[str, Callable[[FigureSettings], ResultTable]]]] = {
    1: [("fig1_ccdf", figure_ccdf)],
    4: [("fig4_square_tail", figure_square_tail)],
    5: [
        ("fig5_square_gain", lambda s: figure_gain_curve(s, NetworkKind.SQUARE)),
        ("fig5_triangular_gain", lambda s: figure_gain_curve(s, NetworkKind.TRIANGULAR)),
    ],
    6: [("fig6_lattice_gains", figure_lattice_gains)],
    7: [("fig7_ginibre_tail", figure_ginibre_tail)],
    8: [("fig8_ginibre_gains", figure_ginibre_gains)],
}

_PLOTS = {
    "fig1_ccdf": (
        "SIR threshold theta (dB)",
        "success probability",
        [("p_ppp", "PPP"), ("p_triangular", "triangular lattice"),
         ("jensen_bound", "exp(-theta)"), ("asappp_triangular", "ASAPPP")],
    ),
    "fig4_square_tail": (
        "SIR threshold theta (dB)",
        "theta^delta p_s(theta)",
        [("scaled_sim", "square lattice"), ("efir_asymptote", "EFIR^delta"),
         ("lower_bound", "lower bound"), ("upper_bound", "upper bound"),
         ("scaled_ppp", "PPP")],
    ),
    "fig5_square_gain": (
        "SIR threshold theta (dB)",
        "gain (dB)",
        [("g_db", "G(theta)"), ("g0_db", "G0"), ("ginf_db", "Ginf")],
    ),
    "fig5_triangular_gain": (
        "SIR threshold theta (dB)",
        "gain (dB)",
        [("g_db", "G(theta)"), ("g0_db", "G0"), ("ginf_db", "Ginf")],
    ),
    "fig6_lattice_gains": (
        "path loss exponent alpha",
        "gain (dB)",
        [("g0_square_db", "G0 square"), ("ginf_square_db", "Ginf square"),
         ("g0_triangular_db", "G0 triangular"), ("ginf_triangular_db", "Ginf triangular")],
    ),
    "fig7_ginibre_tail": (
        "SIR threshold theta (dB)",
        "theta^delta p_s(theta)",
        [("scaled_sim", "Ginibre"), ("efir_asymptote", "EFIR^delta"), ("scaled_ppp", "PPP")],
    ),
    "fig8_ginibre_gains": (
        "path loss exponent alpha",
        "gain",
        [("g0", "G0"), ("ginf", "Ginf"), ("half_alpha", "alpha/2")],
    ),
}


def generate_gnuplot_script(tables: dict[str, ResultTable], output_path: Path) -> str:
    """Write a gnuplot script plotting every data file by relative path."""
    lines = [
        "# Generated by asappp figures",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set grid",
        "set terminal pngcairo size 800,600",
    ]
    for name, table in tables.items():
        xlabel, ylabel, curves = _PLOTS[name]
        plots = ", \\\n     ".join(
            f"'{name}.csv' using 1:{table.columns.index(col) + 1} with lines title '{title}'"
            for col, title in curves
        )
        lines += [
            "",
            f"set output '{name}.png'",
            f"set xlabel '{xlabel}'",
            f"set ylabel '{ylabel}'",
            f"plot {plots}",
        ]
    script = "\n".join(lines) + "\n"

    output_path.parent.mkdir(parents=True, exist_ok=True)
    output_path.write_text(script, encoding="utf-8")
    logger.info(f"Wrote gnuplot script to {output_path}")
    return script


def generate_figures(
    settings: FigureSettings,
    output_dir: Path,
    params: dict | None = None,
    fmt: str = "csv",
) -> dict[str, Path]:
    """Compute the requested figure panels and write one data file per panel.

    CSV files are always written since the gnuplot script reads them; with
    ``fmt="json"`` a JSON copy is written next to each.

    Returns:
        Mapping of data set name to its CSV path, plus the script under "script".
    """
    params = params or {}
    tables: dict[str, ResultTable] = {}
    written: dict[str, Path] = {}
    for panel in settings.panels:
        for name, build in PANELS[panel]:
            logger.info(f"Computing {name}...")
            start = time.perf_counter()
            table = build(settings)
            table.metadata = build_metadata(
                "figures",
                params,
                elapsed=time.perf_counter() - start,
                panel=name,
                **table.metadata,
            )
            path = output_dir / f"{name}.csv"
            generate_csv(table, path)
            if fmt == "json":
                generate_json(table, path.with_suffix(".json"))
            tables[name] = table
            written[name] = path

    written["script"] = output_dir / SCRIPT_NAME
    generate_gnuplot_script(tables, written["script"])
    return written
