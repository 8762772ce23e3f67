"""FastAPI application exposing the screening toolkit.

Error contract: domain validation problems surface as 422 responses, solver
non-convergence as 409.  Both carry a JSON body {"detail": ..., "error": ...}
so thin clients can map them to exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..approximation import delta_cs_prop1, rho1_bounds
from ..calibration import (
    CalibrationInput,
    calibrate,
    calibrated_from_dict,
    pre_merger_equilibrium,
)
from ..demand import (
    DemandKind,
    ProductShareVector,
    ShareVector,
    demand,
    share_basis,
)
from ..equilibrium import (
    Equilibrium,
    FirmModel,
    MergerSpec,
    SolverError,
    delta_cs_actual,
    equilibrium_to_dict,
    firm_model,
    market_from_dict,
    post_merger_model,
    prices_from_equilibrium,
    solve_equilibrium,
)
from ..montecarlo import (
    FIGURES,
    McConfig,
    figure_csv,
    figure_svg,
    records_to_csv,
    run,
    summarize,
)
from .schemas import (
    ApproxRequest,
    CalibrateRequest,
    EquilibriumRequest,
    HealthResponse,
    McRequest,
    MergeRequest,
    ModelIn,
    RhoBoundsRequest,
    RhoBoundsResponse,
)


def _firm_model_in(payload: ModelIn) -> FirmModel:
    from ..demand import DemandParams, v0 as monetary_scale

    params = DemandParams(DemandKind(payload.demand), payload.price_response, payload.scale)
    scale = monetary_scale(params) if payload.v0 is None else payload.v0
    return FirmModel(dict(payload.firm_types), params, h0=payload.h0, v0=scale)


def _shares_in(payload: ModelIn, model: FirmModel) -> ShareVector:
    """Pre-merger firm shares: taken from the payload, recovered from the
    markups, or solved from the types, in that order of preference."""
    basis = share_basis(model.params.kind)
    if payload.shares is not None:
        outside = (
            1.0 - sum(payload.shares.values())
            if payload.outside_share is None
            else payload.outside_share
        )
        return ShareVector(dict(payload.shares), outside, basis)
    if payload.mu is not None:
        if model.params.kind is DemandKind.MNL:
            alpha_star = 1.0
        else:
            sigma = model.params.price_response
            alpha_star = (sigma - 1.0) / sigma
        inside = {f: (1.0 - 1.0 / m) / alpha_star for f, m in payload.mu.items()}
        return ShareVector(inside, 1.0 - sum(inside.values()), basis)
    eq = _solved(model)
    return eq.shares


def _solved(model: FirmModel) -> Equilibrium:
    eq = solve_equilibrium(model)
    if not eq.diagnostics.converged:
        raise SolverError(
            f"equilibrium solve did not converge (residual {eq.diagnostics.residual})",
            eq.diagnostics.residual,
        )
    return eq


def create_app() -> FastAPI:
    app = FastAPI(
        title="mergerscreen",
        version=__version__,
        description="Bertrand merger screening: calibration, equilibrium, "
        "first-order harm approximations, and Monte Carlo accuracy runs.",
    )

    @app.exception_handler(ValueError)
    async def _validation_handler(request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=422, content={"detail": str(exc), "error": "validation"}
        )

    @app.exception_handler(SolverError)
    async def _solver_handler(request: Request, exc: SolverError) -> JSONResponse:
        return JSONResponse(status_code=409, content={"detail": str(exc), "error": "solver"})

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/calibrate")
    def calibrate_endpoint(req: CalibrateRequest) -> dict:
        kind = DemandKind(req.demand)
        outside = 1.0 - sum(req.shares.values()) if req.outside is None else req.outside
        shares = ShareVector(dict(req.shares), outside, share_basis(kind))
        cal = calibrate(CalibrationInput(shares, req.margin_firm, req.margin), kind, req.scale)
        return cal.to_dict()

    @app.post("/equilibrium")
    def equilibrium_endpoint(req: EquilibriumRequest) -> dict:
        if (req.model is None) == (req.market is None):
            raise ValueError("provide exactly one of 'model' or 'market'")
        if req.market is not None:
            market = market_from_dict(req.market.model_dump())
            eq = _solved(firm_model(market))
            prices = prices_from_equilibrium(market, eq)
            quantities = demand(
                prices, [p.quality for p in market.products], market.params, market.h0
            )
            out = equilibrium_to_dict(eq)
            out["products"] = [
                {"id": p.id, "firm": p.firm, "price": price, "quantity": float(q)}
                for p, price, q in zip(market.products, prices, quantities)
            ]
            return out
        eq = _solved(_firm_model_in(req.model))
        return equilibrium_to_dict(eq)

    @app.post("/merge")
    def merge_endpoint(req: MergeRequest) -> dict:
        model = _firm_model_in(req.model)
        merger = MergerSpec(req.firm_a, req.firm_b)
        merged = post_merger_model(model, merger)
        calibrated_payload = all(
            getattr(req.model, name) is not None
            for name in ("mu", "shares", "implied_costs", "outside_share")
        )
        if calibrated_payload:
            # calibrate output: the pre-merger equilibrium is exact, skip the solve
            pre = pre_merger_equilibrium(calibrated_from_dict(req.model.model_dump()))
        else:
            pre = _solved(model)
        post = _solved(merged)
        return {
            "merged_firm": merger.firm_a,
            "pre": equilibrium_to_dict(pre),
            "post": equilibrium_to_dict(post),
            "delta_cs": delta_cs_actual(pre, post),
        }

    @app.post("/approx")
    def approx_endpoint(req: ApproxRequest) -> dict:
        model = _firm_model_in(req.model)
        merger = MergerSpec(req.firm_a, req.firm_b)
        firm_shares = _shares_in(req.model, model)
        if req.product_shares is not None:
            if req.ownership is None:
                raise ValueError("product_shares requires an ownership map")
            product_shares = ProductShareVector(
                dict(req.product_shares), dict(req.ownership)
            )
        else:
            product_shares = ProductShareVector(
                dict(firm_shares.firm_shares), {f: f for f in firm_shares.firm_shares}
            )
        report = delta_cs_prop1(product_shares, firm_shares, merger, model.params, model.v0)
        return report.to_dict()

    @app.post("/mc")
    def mc_endpoint(req: McRequest) -> dict:
        config = McConfig(
            demand=DemandKind(req.demand),
            reps=req.reps,
            n_firms=req.n_firms,
            margin_lo=req.margin_lo,
            margin_hi=req.margin_hi,
            seed=req.seed,
            upp_scale=req.upp_scale,
            dirichlet_alpha=tuple(req.dirichlet_alpha) if req.dirichlet_alpha else None,
        )
        records = run(config, workers=req.workers)
        summary = summarize(records, upp_scale=config.upp_scale)
        out: dict = {"summary": summary.to_dict()}
        if req.include_records:
            out["records_csv"] = records_to_csv(records, config)
        if req.include_figures:
            out["figures"] = {
                name: {
                    "csv": figure_csv(records, name, config.upp_scale),
                    "svg": figure_svg(records, name, config.upp_scale),
                }
                for name in FIGURES
            }
        return out

    @app.post("/rho-bounds", response_model=RhoBoundsResponse)
    def rho_bounds_endpoint(req: RhoBoundsRequest) -> RhoBoundsResponse:
        rows = []
        for d0 in req.delta0:
            bounds = rho1_bounds(req.c0, d0)
            rows.append({"delta0": d0, "lower": bounds.lower, "upper": bounds.upper})
        return RhoBoundsResponse(c0=req.c0, rows=rows)

    return app


app = create_app()
