"""Monte Carlo accuracy experiments for the first-order approximations.

Each replicate draws a random market of single-product firms (shares from a
Dirichlet over firms plus the outside option, one margin from a uniform
range), calibrates the demand model, merges firms 1 and 2 without synergy,
solves the post-merger equilibrium, and records actual versus approximated
price and welfare effects with the monetary scale normalized to V0 = 1.

Replicates are seeded individually from (seed, replicate index), so results
are a pure function of the configuration and identical under any degree of
parallelism.  Replicates whose post-merger solve fails to converge are
flagged and excluded from summaries; the discard rate is reported and a
warning is emitted if it exceeds 5%.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import median

import numpy as np

from .approximation import delta_cs_prop1
from .calibration import CalibrationInput, calibrate, pre_merger_equilibrium
from .demand import DemandKind, ProductShareVector, ShareVector, share_basis
from .equilibrium import (
    MergerSpec,
    SolverError,
    delta_cs_actual,
    post_merger_model,
    solve_equilibrium,
)

DISCARD_WARN_RATE = 0.05


@dataclass(frozen=True)
class McConfig:
    """Experiment configuration.

    ``dirichlet_alpha`` must have length n_firms + 1 (the last component is
    the outside option); all-ones is the uninformative default.  ``upp_scale``
    multiplies pricing pressure in summaries and figures (2.0 corrects the
    CES downward bias).
    """

    demand: DemandKind
    reps: int = 2000
    n_firms: int = 6
    margin_lo: float = 0.3
    margin_hi: float = 0.6
    seed: int = 0
    upp_scale: float = 1.0
    dirichlet_alpha: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if self.n_firms < 2:
            raise ValueError(f"need at least two firms to merge, got {self.n_firms}")
        if not 0.0 < self.margin_lo < self.margin_hi < 1.0:
            raise ValueError(
                f"margins must satisfy 0 < lo < hi < 1, got [{self.margin_lo}, {self.margin_hi}]"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.upp_scale < 0.0:
            raise ValueError(f"upp_scale must be nonnegative, got {self.upp_scale}")
        if self.dirichlet_alpha is not None:
            if len(self.dirichlet_alpha) != self.n_firms + 1:
                raise ValueError(
                    f"dirichlet_alpha needs length {self.n_firms + 1}, "
                    f"got {len(self.dirichlet_alpha)}"
                )
            if any(a <= 0.0 for a in self.dirichlet_alpha):
                raise ValueError("dirichlet_alpha entries must be positive")

    def firm_ids(self) -> list[str]:
        return [str(i + 1) for i in range(self.n_firms)]


@dataclass(frozen=True)
class McRecord:
    """One replicate: the draw, the calibration, and both effect measurements."""

    replicate: int
    shares: tuple[float, ...]
    outside_share: float
    margin: float
    converged: bool
    price_response: float | None = None
    upp: dict[str, float] | None = None
    dp: dict[str, float] | None = None
    dcs_actual: float | None = None
    dcs_prop1: float | None = None
    dcs_ns: float | None = None


@dataclass(frozen=True)
class McSummary:
    n_converged: int
    n_discarded: int
    discard_rate: float
    mae_prop1: float
    mae_ns: float
    bias_prop1: float
    bias_ns: float
    mae_upp: float
    median_ratio_dp_over_upp: float
    upp_scale: float

    def to_dict(self) -> dict:
        return {
            "n_converged": self.n_converged,
            "n_discarded": self.n_discarded,
            "discard_rate": self.discard_rate,
            "mae_prop1": self.mae_prop1,
            "mae_ns": self.mae_ns,
            "bias_prop1": self.bias_prop1,
            "bias_ns": self.bias_ns,
            "mae_upp": self.mae_upp,
            "median_ratio_dp_over_upp": self.median_ratio_dp_over_upp,
            "upp_scale": self.upp_scale,
        }


def simulate_merger(
    shares: ShareVector,
    margin: float,
    kind: DemandKind,
    firm_a: str = "1",
    firm_b: str = "2",
    margin_firm: str = "1",
) -> dict:
    """Calibrate, merge firm_a and firm_b, and measure actual vs approximated effects.

    Returns the result fields of a record; raises SolverError when the
    post-merger solve does not converge.
    """
    cal = calibrate(CalibrationInput(shares, margin_firm, margin), kind)
    params = cal.model.params
    merger = MergerSpec(firm_a, firm_b)
    single_products = ProductShareVector(
        dict(shares.firm_shares), {f: f for f in shares.firm_shares}
    )
    report = delta_cs_prop1(single_products, shares, merger, params, v0=1.0)

    post = solve_equilibrium(post_merger_model(cal.model, merger))
    if not post.diagnostics.converged:
        raise SolverError(
            "post-merger equilibrium did not converge", post.diagnostics.residual
        )
    pre = pre_merger_equilibrium(cal)
    mu_merged = post.mu[firm_a]  # merged entity keeps the acquirer's id

    dp: dict[str, float] = {}
    for f in (firm_a, firm_b):
        if kind is DemandKind.MNL:
            dp[f] = (mu_merged - cal.mu[f]) / params.price_response
        else:
            sigma = params.price_response
            dp[f] = cal.implied_costs[f] / (1.0 - mu_merged / sigma) - 1.0

    return {
        "price_response": params.price_response,
        "upp": {f: report.upp[f] for f in (firm_a, firm_b)},
        "dp": dp,
        "dcs_actual": delta_cs_actual(pre, post),
        "dcs_prop1": report.dcs_prop1,
        "dcs_ns": report.dcs_ns,
    }


def _replicate(config: McConfig, index: int) -> McRecord:
    rng = np.random.default_rng([config.seed, index])
    k = config.n_firms
    if config.dirichlet_alpha is None:
        # Dirichlet(1, ..., 1) via normalized unit-rate exponentials.
        draws = rng.standard_exponential(k + 1)
    else:
        draws = rng.gamma(np.asarray(config.dirichlet_alpha, dtype=float))
    draws = draws / draws.sum()
    firm_shares = {f: float(draws[i]) for i, f in enumerate(config.firm_ids())}
    outside = float(draws[k])
    margin = float(rng.uniform(config.margin_lo, config.margin_hi))
    base = {
        "replicate": index,
        "shares": tuple(firm_shares.values()),
        "outside_share": outside,
        "margin": margin,
    }
    try:
        shares = ShareVector(firm_shares, outside, share_basis(config.demand))
        result = simulate_merger(shares, margin, config.demand)
    except (SolverError, ValueError, OverflowError):
        return McRecord(converged=False, **base)
    return McRecord(converged=True, **base, **result)


def _replicate_star(args: tuple[McConfig, int]) -> McRecord:
    return _replicate(*args)


def run(config: McConfig, workers: int = 1) -> list[McRecord]:
    """Execute all replicates, ordered by replicate index.

    ``workers > 1`` distributes replicates across processes; per-replicate
    seeding keeps the output identical to a serial run.
    """
    if workers <= 1:
        return [_replicate(config, i) for i in range(config.reps)]
    jobs = [(config, i) for i in range(config.reps)]
    chunk = max(1, config.reps // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replicate_star, jobs, chunksize=chunk))


def summarize(records: list[McRecord], upp_scale: float = 1.0) -> McSummary:
    """Accuracy statistics of the approximations over converged replicates.

    ``mae_upp`` compares price effects against upp_scale * UPP; the
    median dp/UPP ratio always uses the raw (unscaled) pressure.
    """
    converged = [r for r in records if r.converged]
    if not converged:
        raise ValueError("no converged replicates to summarize")
    n_disc = len(records) - len(converged)
    rate = n_disc / len(records)
    if rate > DISCARD_WARN_RATE:
        warnings.warn(
            f"{n_disc} of {len(records)} replicates ({rate:.1%}) were discarded "
            "for non-convergence",
            RuntimeWarning,
            stacklevel=2,
        )
    err_prop1 = [r.dcs_prop1 - r.dcs_actual for r in converged]
    err_ns = [r.dcs_ns - r.dcs_actual for r in converged]
    upp_errors: list[float] = []
    ratios: list[float] = []
    for r in converged:
        for f, pressure in r.upp.items():
            upp_errors.append(abs(r.dp[f] - upp_scale * pressure))
            if pressure > 0.0:
                ratios.append(r.dp[f] / pressure)
    return McSummary(
        n_converged=len(converged),
        n_discarded=n_disc,
        discard_rate=rate,
        mae_prop1=sum(abs(e) for e in err_prop1) / len(converged),
        mae_ns=sum(abs(e) for e in err_ns) / len(converged),
        bias_prop1=sum(err_prop1) / len(converged),
        bias_ns=sum(err_ns) / len(converged),
        mae_upp=sum(upp_errors) / len(upp_errors),
        median_ratio_dp_over_upp=median(ratios) if ratios else math.nan,
        upp_scale=upp_scale,
    )


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return f"{value:.17g}"


def records_to_csv(records: list[McRecord], config: McConfig) -> str:
    """Render replicates as CSV with a stable column order.

    Columns: replicate, converged, s_1..s_k, outside, margin, price_response,
    upp_1, upp_2, dp_1, dp_2, dcs_actual, dcs_prop1, dcs_ns.  Result columns
    are empty on discarded replicates.
    """
    firm_a, firm_b = "1", "2"
    header = (
        ["replicate", "converged"]
        + [f"s_{f}" for f in config.firm_ids()]
        + ["outside", "margin", "price_response", "upp_1", "upp_2", "dp_1", "dp_2"]
        + ["dcs_actual", "dcs_prop1", "dcs_ns"]
    )
    lines = [",".join(header)]
    for r in records:
        cells = [str(r.replicate), "1" if r.converged else "0"]
        cells += [_fmt(s) for s in r.shares]
        cells += [_fmt(r.outside_share), _fmt(r.margin), _fmt(r.price_response)]
        cells += [_fmt(r.upp[f]) if r.upp else "" for f in (firm_a, firm_b)]
        cells += [_fmt(r.dp[f]) if r.dp else "" for f in (firm_a, firm_b)]
        cells += [_fmt(r.dcs_actual), _fmt(r.dcs_prop1), _fmt(r.dcs_ns)]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


FIGURES = ("upp_scatter", "cs_scatter_prop1", "cs_scatter_ns")


def figure_points(
    records: list[McRecord], which: str, upp_scale: float = 1.0
) -> list[tuple[float, float]]:
    """(predicted, actual) pairs for one diagnostic scatter."""
    if which not in FIGURES:
        raise ValueError(f"unknown figure {which!r}; expected one of {FIGURES}")
    points: list[tuple[float, float]] = []
    for r in records:
        if not r.converged:
            continue
        if which == "upp_scatter":
            for f in r.upp:
                points.append((upp_scale * r.upp[f], r.dp[f]))
        elif which == "cs_scatter_prop1":
            points.append((r.dcs_prop1, r.dcs_actual))
        else:
            points.append((r.dcs_ns, r.dcs_actual))
    return points


def figure_csv(records: list[McRecord], which: str, upp_scale: float = 1.0) -> str:
    lines = ["predicted,actual"]
    for x, y in figure_points(records, which, upp_scale):
        lines.append(f"{x:.17g},{y:.17g}")
    return "\n".join(lines) + "\n"


def figure_svg(records: list[McRecord], which: str, upp_scale: float = 1.0) -> str:
    """Minimal scatter plot with a 45-degree reference line."""
    points = figure_points(records, which, upp_scale)
    size, pad = 480, 50
    if points:
        values = [v for xy in points for v in xy]
        lo, hi = min(values), max(values)
    else:
        lo, hi = 0.0, 1.0
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo
    lo -= 0.05 * span
    hi += 0.05 * span

    def sx(v: float) -> float:
        return pad + (v - lo) / (hi - lo) * (size - 2 * pad)

    def sy(v: float) -> float:
        return size - pad - (v - lo) / (hi - lo) * (size - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{sx(lo):.2f}" y1="{sy(lo):.2f}" x2="{sx(hi):.2f}" y2="{sy(hi):.2f}" '
        'stroke="#999999" stroke-dasharray="4 3"/>',
    ]
    for x, y in points:
        parts.append(
            f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2" '
            'fill="#1f77b4" fill-opacity="0.45"/>'
        )
    parts.append(
        f'<text x="{size / 2:.0f}" y="{size - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{which} (predicted vs actual)</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_figure_data(
    records: list[McRecord],
    which: str,
    path,
    *,
    upp_scale: float = 1.0,
    svg_path=None,
) -> None:
    """Write a figure's CSV (and optionally its SVG rendering) to disk."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(figure_csv(records, which, upp_scale))
    if svg_path is not None:
        with open(svg_path, "w", encoding="utf-8") as fh:
            fh.write(figure_svg(records, which, upp_scale))
