"""Recover demand parameters and firm types from shares and one margin.

Given pre-merger shares (with outside option) and a single firm's margin,
with all pre-merger prices normalized to one, the equilibrium identities
invert in closed form:

    MNL:  H = 1/(1 - sum s_f),  mu_f = 1/(1 - s_f),
          T_f = H s_f exp(mu_f),  alpha = mu_1 / m_1
    CES:  H = 1/(1 - sum s_f^R),  sigma = (1/m_1 - 1)/(1 - s_1^R) + 1,
          mu_f = 1/(1 - ((sigma-1)/sigma) s_f^R),
          T_f = s_f^R H (1 - mu_f/sigma)^(1-sigma)

Unit prices make absolute and relative price changes coincide and pin the
implied marginal costs (c = 1 - mu/alpha under MNL, c = 1 - mu/sigma under
CES).  The market-size parameter is not identified by shares and margins;
by default it is chosen so that the monetary scale V0 equals one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .demand import (
    QUANTITY,
    REVENUE,
    DemandKind,
    DemandParams,
    ShareVector,
    equilibrium_margin,
    share_basis,
)
from .equilibrium import (
    Equilibrium,
    FirmModel,
    Market,
    Product,
    SolverDiagnostics,
)


@dataclass(frozen=True)
class CalibrationInput:
    """Observed pre-merger shares plus one firm's margin, at unit prices."""

    shares: ShareVector
    margin_firm: str
    margin: float
    prices_normalized: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.margin < 1.0:
            raise ValueError(f"margin must lie in (0, 1), got {self.margin}")
        if self.margin_firm not in self.shares.firm_shares:
            raise ValueError(f"margin firm {self.margin_firm!r} not among the shares")
        if self.shares.outside_share <= 0.0:
            raise ValueError("calibration needs a positive outside share")
        if not self.prices_normalized:
            raise ValueError("calibration formulas assume unit pre-merger prices")


@dataclass(frozen=True)
class CalibratedModel:
    """A firm model that reproduces the calibration inputs when solved."""

    model: FirmModel
    mu: dict[str, float]
    implied_costs: dict[str, float]
    shares: ShareVector

    def to_dict(self) -> dict:
        return {
            "demand": self.model.params.kind.value,
            "price_response": self.model.params.price_response,
            "scale": self.model.params.scale,
            "h0": self.model.h0,
            "v0": self.model.v0,
            "firm_types": dict(self.model.firm_types),
            "mu": dict(self.mu),
            "implied_costs": dict(self.implied_costs),
            "shares": dict(self.shares.firm_shares),
            "outside_share": self.shares.outside_share,
            "basis": self.shares.basis,
        }


def calibrated_from_dict(payload: dict) -> CalibratedModel:
    try:
        params = DemandParams(
            DemandKind(payload["demand"]),
            float(payload["price_response"]),
            float(payload["scale"]),
        )
        model = FirmModel(
            {str(f): float(t) for f, t in payload["firm_types"].items()},
            params,
            h0=float(payload.get("h0", 1.0)),
            v0=float(payload["v0"]),
        )
        shares = ShareVector(
            {str(f): float(s) for f, s in payload["shares"].items()},
            float(payload["outside_share"]),
            str(payload.get("basis") or share_basis(params.kind)),
        )
        return CalibratedModel(
            model=model,
            mu={str(f): float(m) for f, m in payload["mu"].items()},
            implied_costs={str(f): float(c) for f, c in payload["implied_costs"].items()},
            shares=shares,
        )
    except (KeyError, TypeError, AttributeError) as err:
        raise ValueError(f"malformed calibrated model payload: {err}") from err


def calibrate_mnl(inp: CalibrationInput, scale: float | None = None) -> CalibratedModel:
    """Calibrate an MNL model from quantity shares and one absolute margin.

    ``scale`` is the market size N; omitted, it is set to alpha so that
    V0 = N/alpha = 1.  Implied costs c = 1 - mu_f/alpha can be nonpositive
    for extreme margin/share combinations; the firm types stay valid either
    way and only product-level materialization is then unavailable.
    """
    if inp.shares.basis != QUANTITY:
        raise ValueError("MNL calibration expects quantity shares")
    shares = inp.shares.firm_shares
    total = sum(shares.values())
    if total >= 1.0:
        raise ValueError(f"inside shares must sum below 1, got {total}")
    h = 1.0 / (1.0 - total)
    mu = {f: 1.0 / (1.0 - s) for f, s in shares.items()}
    types = {f: h * s * math.exp(mu[f]) for f, s in shares.items()}
    alpha = mu[inp.margin_firm] / inp.margin
    market_size = alpha if scale is None else scale
    params = DemandParams(DemandKind.MNL, alpha, market_size)
    costs = {f: 1.0 - mu[f] / alpha for f in shares}
    model = FirmModel(types, params, h0=1.0, v0=market_size / alpha)
    return CalibratedModel(model=model, mu=mu, implied_costs=costs, shares=inp.shares)


def calibrate_ces(inp: CalibrationInput, scale: float | None = None) -> CalibratedModel:
    """Calibrate a CES model from revenue shares and one relative margin.

    ``scale`` is the budget Y; omitted, it is set to sigma - 1 so that
    V0 = Y/(sigma - 1) = 1.  The implied sigma exceeds 1 for any margin in
    (0, 1).
    """
    if inp.shares.basis != REVENUE:
        raise ValueError("CES calibration expects revenue shares")
    shares = inp.shares.firm_shares
    total = sum(shares.values())
    if total >= 1.0:
        raise ValueError(f"inside shares must sum below 1, got {total}")
    h = 1.0 / (1.0 - total)
    s1 = shares[inp.margin_firm]
    sigma = (1.0 / inp.margin - 1.0) / (1.0 - s1) + 1.0
    mu: dict[str, float] = {}
    costs: dict[str, float] = {}
    types: dict[str, float] = {}
    for f, s in shares.items():
        # Stable forms of 1/(1 - ((sigma-1)/sigma) s) and 1 - mu/sigma; the
        # direct expressions lose precision as s -> 1.
        denom = sigma * (1.0 - s) + s
        mu[f] = sigma / denom
        cost = (sigma - 1.0) * (1.0 - s) / denom
        costs[f] = cost
        types[f] = s * h * cost ** (1.0 - sigma)
    budget = sigma - 1.0 if scale is None else scale
    params = DemandParams(DemandKind.CES, sigma, budget)
    model = FirmModel(types, params, h0=1.0, v0=budget / (sigma - 1.0))
    return CalibratedModel(model=model, mu=mu, implied_costs=costs, shares=inp.shares)


def calibrate(
    inp: CalibrationInput, kind: DemandKind, scale: float | None = None
) -> CalibratedModel:
    if kind is DemandKind.MNL:
        return calibrate_mnl(inp, scale)
    return calibrate_ces(inp, scale)


@dataclass(frozen=True)
class UppInputs:
    """Per-firm margins and shares, ready for pricing-pressure formulas."""

    margins: dict[str, float]
    shares: ShareVector


def implied_upp_inputs(cal: CalibratedModel) -> UppInputs:
    """Margins implied by the calibrated equilibrium, plus the input shares.

    For the margin firm this reproduces the calibration margin exactly.
    """
    params = cal.model.params
    margins = {
        f: equilibrium_margin(s, params) for f, s in cal.shares.firm_shares.items()
    }
    return UppInputs(margins=margins, shares=cal.shares)


def pre_merger_equilibrium(cal: CalibratedModel) -> Equilibrium:
    """The pre-merger equilibrium implied by a calibration, assembled exactly.

    Calibration inverts the equilibrium identities, so no solve is needed:
    H, mu, and the shares already satisfy the system.
    """
    shares = cal.shares
    h = 1.0 / (1.0 - shares.total_inside())
    v0 = cal.model.v0
    profits = {f: v0 * (m - 1.0) for f, m in cal.mu.items()}
    residual = abs(1.0 / h + shares.total_inside() - 1.0)
    return Equilibrium(
        h=h,
        mu=dict(cal.mu),
        shares=shares,
        profits=profits,
        cs=v0 * math.log(h),
        v0=v0,
        diagnostics=SolverDiagnostics(iterations=0, residual=residual, converged=True),
    )


def market_from_calibrated(cal: CalibratedModel) -> Market:
    """Materialize single-product firms with unit pre-merger prices.

    Qualities are chosen to reproduce each firm's type at its implied cost
    (v = log T + alpha c under MNL, v = T c^(sigma-1) under CES), so solving
    the resulting market returns every price to 1.  Requires positive implied
    costs.
    """
    params = cal.model.params
    products = []
    for f, t in cal.model.firm_types.items():
        cost = cal.implied_costs[f]
        if cost <= 0.0:
            raise ValueError(
                f"firm {f!r} has implied cost {cost}; products cannot be materialized"
            )
        if t <= 0.0:
            raise ValueError(f"firm {f!r} has zero type; no product to materialize")
        if params.kind is DemandKind.MNL:
            quality = math.log(t) + params.price_response * cost
        else:
            quality = t * cost ** (params.price_response - 1.0)
        products.append(Product(id=f, firm=f, quality=quality, cost=cost))
    return Market(tuple(products), params, h0=cal.model.h0)
