"""Merger screening for differentiated-products Bertrand markets.

Calibrates MNL/CES demand from shares and a margin, solves the aggregative
Bertrand equilibrium exactly, and approximates merger harm from pre-merger
concentration statistics.  A FastAPI service (``mergerscreen.service``)
exposes the toolkit over HTTP and the CLI (``mergerscreen.cli``) is a thin
client of that service.
"""

__version__ = "0.1.0"

from .approximation import (
    ApproxReport,
    PassThroughMatrix,
    Rho1Bounds,
    delta_cs_diversion,
    delta_cs_ns,
    delta_cs_passthrough,
    delta_cs_prop1,
    guppi_ces,
    rho1,
    rho1_bounds,
    rho2,
    upp,
)
from .calibration import (
    CalibratedModel,
    CalibrationInput,
    calibrate,
    calibrate_ces,
    calibrate_mnl,
    implied_upp_inputs,
    market_from_calibrated,
    pre_merger_equilibrium,
)
from .demand import (
    DemandKind,
    DemandParams,
    ProductShareVector,
    ShareVector,
    ces_elasticity_factor,
    delta_hhi,
    demand,
    diversion_quantity,
    diversion_revenue,
    equilibrium_margin,
    hhi,
    inside_shares,
    v0,
)
from .equilibrium import (
    Equilibrium,
    FirmModel,
    Market,
    MergerSpec,
    Product,
    SolverError,
    delta_cs_actual,
    firm_model,
    firm_type,
    post_merger_model,
    prices_from_equilibrium,
    solve_equilibrium,
    solve_mu,
)
from .montecarlo import McConfig, McRecord, McSummary, emit_figure_data, run, summarize

__all__ = [
    "__version__",
    "ApproxReport",
    "CalibratedModel",
    "CalibrationInput",
    "DemandKind",
    "DemandParams",
    "Equilibrium",
    "FirmModel",
    "Market",
    "McConfig",
    "McRecord",
    "McSummary",
    "MergerSpec",
    "PassThroughMatrix",
    "Product",
    "ProductShareVector",
    "Rho1Bounds",
    "ShareVector",
    "SolverError",
    "calibrate",
    "calibrate_ces",
    "calibrate_mnl",
    "ces_elasticity_factor",
    "delta_cs_actual",
    "delta_cs_diversion",
    "delta_cs_ns",
    "delta_cs_passthrough",
    "delta_cs_prop1",
    "delta_hhi",
    "demand",
    "diversion_quantity",
    "diversion_revenue",
    "emit_figure_data",
    "equilibrium_margin",
    "firm_model",
    "firm_type",
    "guppi_ces",
    "hhi",
    "implied_upp_inputs",
    "inside_shares",
    "market_from_calibrated",
    "post_merger_model",
    "pre_merger_equilibrium",
    "prices_from_equilibrium",
    "rho1",
    "rho1_bounds",
    "rho2",
    "run",
    "solve_equilibrium",
    "solve_mu",
    "summarize",
    "upp",
    "v0",
]
