"""Aggregative-games Bertrand equilibrium for multiproduct MNL/CES oligopoly.

A market is summarized by firm types T_f (sufficient statistics of each
firm's product portfolio).  The equilibrium is the triple
({mu_f}, {s_f}, H) solving

    1   = mu_f (1 - (T_f/H) exp(-mu_f))                         (MNL)
    1   = mu_f (1 - ((sigma-1)/sigma)(T_f/H)(1 - mu_f/sigma)^(sigma-1))  (CES)
    s_f = (T_f/H) exp(-mu_f)            resp. (T_f/H)(1 - mu_f/sigma)^(sigma-1)
    1   = H0/H + sum_f s_f

where mu_f is the firm's iota-markup (alpha(p-c) under MNL, sigma(p-c)/p
under CES) and H the market aggregator.  The solution is unique; consumer
surplus is V0 log H and firm profits are V0 (mu_f - 1).

Solver layout: the aggregate excess Phi(H) = H0/H + sum_f s_f(H) - 1 is
strictly decreasing on the bracket [H0, H0 + sum_f T_f], so an outer
bisection (refined by secant steps once the bracket is tight) is globally
convergent.  The inner fitting-in condition for each mu_f is strictly
monotone on its domain and is solved with a bracketed Newton iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .demand import (
    ADDING_UP_TOL,
    DemandKind,
    DemandParams,
    ShareVector,
    share_basis,
    v0 as monetary_scale,
)

OUTER_TOL = 1e-12
INNER_TOL = 1e-12
MAX_OUTER = 200
MAX_INNER = 100

_NAN = float("nan")


class SolverError(RuntimeError):
    """Raised when a scalar root-finder fails to reach its tolerance."""

    def __init__(self, message: str, residual: float = _NAN):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class Product:
    id: str
    firm: str
    quality: float
    cost: float


@dataclass(frozen=True)
class Market:
    """Model primitives: products with ownership, costs, and qualities.

    ``h0`` is the baseline aggregator value (log h0 is the outside option's
    utility); empirical conventions set it to 1.
    """

    products: tuple[Product, ...]
    params: DemandParams
    h0: float = 1.0

    def __post_init__(self) -> None:
        if self.h0 < 0.0:
            raise ValueError(f"h0 must be nonnegative, got {self.h0}")
        seen: set[str] = set()
        for prod in self.products:
            if prod.id in seen:
                raise ValueError(f"duplicate product id {prod.id!r}")
            seen.add(prod.id)
            if prod.cost <= 0.0:
                raise ValueError(f"product {prod.id!r} has nonpositive cost {prod.cost}")
            if self.params.kind is DemandKind.CES and prod.quality <= 0.0:
                raise ValueError(f"CES product {prod.id!r} needs positive quality")

    def firms(self) -> list[str]:
        out: list[str] = []
        for prod in self.products:
            if prod.firm not in out:
                out.append(prod.firm)
        return out

    def products_of(self, firm: str) -> list[Product]:
        return [p for p in self.products if p.firm == firm]


@dataclass(frozen=True)
class FirmModel:
    """Firm-level sufficient statistics consumed by the solver."""

    firm_types: dict[str, float]
    params: DemandParams
    h0: float = 1.0
    v0: float = 1.0

    def __post_init__(self) -> None:
        if self.h0 < 0.0:
            raise ValueError(f"h0 must be nonnegative, got {self.h0}")
        if self.v0 <= 0.0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        for firm, t in self.firm_types.items():
            if t < 0.0 or math.isnan(t):
                raise ValueError(f"type of firm {firm!r} must be nonnegative, got {t}")


@dataclass(frozen=True)
class MergerSpec:
    """A merger of two distinct firms.  Merger-specific synergies are not
    modeled, so ``synergy`` must stay ``None``."""

    firm_a: str
    firm_b: str
    synergy: None = None

    def __post_init__(self) -> None:
        if self.firm_a == self.firm_b:
            raise ValueError(f"merging firms must be distinct, got {self.firm_a!r} twice")
        if self.synergy is not None:
            raise ValueError("merger-specific synergies are not supported")


@dataclass(frozen=True)
class SolverDiagnostics:
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class Equilibrium:
    h: float
    mu: dict[str, float]
    shares: ShareVector
    profits: dict[str, float]
    cs: float
    v0: float
    diagnostics: SolverDiagnostics


def firm_type(market: Market, firm: str) -> float:
    """Type T_f: sum over the firm's products of exp(v - alpha c) (MNL) or
    v c^(1-sigma) (CES)."""
    prods = market.products_of(firm)
    if not prods:
        raise ValueError(f"unknown firm {firm!r}")
    params = market.params
    if params.kind is DemandKind.MNL:
        return sum(math.exp(p.quality - params.price_response * p.cost) for p in prods)
    return sum(p.quality * p.cost ** (1.0 - params.price_response) for p in prods)


def firm_model(market: Market, v0: float | None = None) -> FirmModel:
    """Collapse a market into firm types; v0 defaults to N/alpha or Y/(sigma-1)."""
    types = {f: firm_type(market, f) for f in market.firms()}
    scale = monetary_scale(market.params) if v0 is None else v0
    return FirmModel(types, market.params, h0=market.h0, v0=scale)


def _solve_mu_mnl(r: float, initial: float | None, tol: float, max_iter: int) -> float:
    # psi(mu) = mu (1 - r e^{-mu}) - 1 is strictly increasing on [1, inf):
    # psi' = 1 + r e^{-mu} (mu - 1) >= 1.  psi(1) = -r/e <= 0.
    lo, hi = 1.0, 50.0
    while hi * (1.0 - r * math.exp(-hi)) - 1.0 < 0.0:
        hi *= 2.0
        if hi > 1e6:
            raise SolverError(f"no markup bracket for T/H = {r}")
    x = initial if initial is not None and lo < initial < hi else min(2.0, 0.5 * (lo + hi))
    for _ in range(max_iter):
        a = r * math.exp(-x)
        fx = x * (1.0 - a) - 1.0
        if abs(fx) <= tol:
            return x
        if fx < 0.0:
            lo = x
        else:
            hi = x
        step = fx / (1.0 + a * (x - 1.0))
        x -= step
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
    raise SolverError("markup iteration did not converge (MNL)", residual=fx)


def _solve_mu_ces(r: float, sigma: float, initial: float | None, tol: float, max_iter: int) -> float:
    # Work in d = sigma - mu, d in (0, sigma - 1]: avoids cancellation in
    # (1 - mu/sigma) when mu approaches sigma.  psi(d) = (sigma - d)
    # (1 - k (d/sigma)^{sigma-1}) - 1 is strictly decreasing:
    # psi_d = -1 - k (sigma - d - 1)(d/sigma)^{sigma-2} < 0 on the domain.
    k = (sigma - 1.0) / sigma * r

    def psi(d: float) -> float:
        return (sigma - d) * (1.0 - k * (d / sigma) ** (sigma - 1.0)) - 1.0

    lo, hi = 0.0, sigma - 1.0  # psi(0) = sigma - 1 > 0, psi(sigma - 1) <= 0
    x = sigma - initial if initial is not None and lo < sigma - initial < hi else 0.5 * hi
    for _ in range(max_iter):
        fx = psi(x)
        if abs(fx) <= tol:
            return sigma - x
        if fx > 0.0:
            lo = x
        else:
            hi = x
        slope = -1.0 - k * (sigma - x - 1.0) * (x / sigma) ** (sigma - 2.0)
        x -= fx / slope
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
    raise SolverError("markup iteration did not converge (CES)", residual=fx)


def solve_mu(
    t: float,
    h: float,
    params: DemandParams,
    *,
    tol: float = INNER_TOL,
    max_iter: int = MAX_INNER,
    initial: float | None = None,
) -> float:
    """Solve the fitting-in condition for a firm's iota-markup given (T, H).

    Returns the unique mu in [1, inf) (MNL) or [1, sigma) (CES).  A firm with
    zero type prices as under monopolistic competition, mu = 1.
    """
    if t < 0.0:
        raise ValueError(f"firm type must be nonnegative, got {t}")
    if h <= 0.0:
        raise ValueError(f"aggregator must be positive, got {h}")
    if t == 0.0:
        return 1.0
    r = t / h
    if params.kind is DemandKind.MNL:
        return _solve_mu_mnl(r, initial, tol, max_iter)
    return _solve_mu_ces(r, params.price_response, initial, tol, max_iter)


def _share_at(mu: float, t_over_h: float, params: DemandParams) -> float:
    if params.kind is DemandKind.MNL:
        return t_over_h * math.exp(-mu)
    sigma = params.price_response
    return t_over_h * (1.0 - mu / sigma) ** (sigma - 1.0)


def _failed_equilibrium(model: FirmModel, iterations: int, residual: float) -> Equilibrium:
    shares = ShareVector(
        {f: _NAN for f in model.firm_types},
        _NAN,
        share_basis(model.params.kind),
        validate=False,
    )
    return Equilibrium(
        h=_NAN,
        mu={f: _NAN for f in model.firm_types},
        shares=shares,
        profits={f: _NAN for f in model.firm_types},
        cs=_NAN,
        v0=model.v0,
        diagnostics=SolverDiagnostics(iterations, residual, False),
    )


def solve_equilibrium(
    model: FirmModel,
    *,
    outer_tol: float = OUTER_TOL,
    inner_tol: float = INNER_TOL,
    max_outer: int = MAX_OUTER,
    max_inner: int = MAX_INNER,
) -> Equilibrium:
    """Solve the three-equation system for a firm-level model.

    Non-convergence is reported through ``diagnostics.converged`` rather than
    raised, so batch callers can discard failed instances.
    """
    params = model.params
    h0 = model.h0
    if h0 <= 0.0:
        raise ValueError("solving requires h0 > 0 (no interior equilibrium otherwise)")
    firms = sorted(model.firm_types)
    total_type = sum(model.firm_types[f] for f in firms)

    def equilibrium_at(h: float, mus: dict[str, float], shares: dict[str, float], its: int, resid: float) -> Equilibrium:
        profits = {f: model.v0 * (mus[f] - 1.0) for f in firms}
        # Validation re-checks the adding-up identity; skip it when the caller
        # asked for a tolerance looser than the share type guarantees.
        sv = ShareVector(
            dict(shares), h0 / h, share_basis(params.kind), validate=abs(resid) <= ADDING_UP_TOL
        )
        return Equilibrium(
            h=h,
            mu=dict(mus),
            shares=sv,
            profits=profits,
            cs=model.v0 * math.log(h),
            v0=model.v0,
            diagnostics=SolverDiagnostics(its, resid, True),
        )

    if total_type == 0.0:
        # Outside option only: H = H0, every firm at the competitive floor.
        mus = {f: 1.0 for f in firms}
        shares = {f: 0.0 for f in firms}
        return equilibrium_at(h0, mus, shares, 0, 0.0)

    warm: dict[str, float] = {}

    def excess(h: float) -> tuple[float, dict[str, float], dict[str, float]]:
        mus: dict[str, float] = {}
        shares: dict[str, float] = {}
        for f in firms:
            t = model.firm_types[f]
            mu = solve_mu(t, h, params, tol=inner_tol, max_iter=max_inner, initial=warm.get(f))
            warm[f] = mu
            mus[f] = mu
            shares[f] = _share_at(mu, t / h, params)
        return h0 / h + sum(shares.values()) - 1.0, mus, shares

    lo, hi = h0, h0 + total_type
    width0 = hi - lo
    iterations = 0
    best: tuple[float, float, dict[str, float], dict[str, float]] | None = None

    try:
        f_lo, mus, shares = excess(lo)
        iterations += 1
        if abs(f_lo) <= outer_tol:
            return equilibrium_at(lo, mus, shares, iterations, f_lo)
        f_hi, mus, shares = excess(hi)
        iterations += 1
        if abs(f_hi) <= outer_tol:
            return equilibrium_at(hi, mus, shares, iterations, f_hi)
        best = (abs(f_hi), hi, mus, shares)

        # Bisection until the bracket is tight enough for secant refinement.
        while hi - lo > 1e-3 * width0 and iterations < max_outer:
            mid = 0.5 * (lo + hi)
            f_mid, mus, shares = excess(mid)
            iterations += 1
            if abs(f_mid) < best[0]:
                best = (abs(f_mid), mid, mus, shares)
            if abs(f_mid) <= outer_tol:
                return equilibrium_at(mid, mus, shares, iterations, f_mid)
            if f_mid > 0.0:
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid

        # Secant steps, clipped to the bracket, with bisection fallback.
        x0, g0, x1, g1 = lo, f_lo, hi, f_hi
        while iterations < max_outer:
            denom = g1 - g0
            x2 = x1 - g1 * (x1 - x0) / denom if denom != 0.0 else 0.5 * (lo + hi)
            if not lo < x2 < hi:
                x2 = 0.5 * (lo + hi)
            g2, mus, shares = excess(x2)
            iterations += 1
            if abs(g2) < best[0]:
                best = (abs(g2), x2, mus, shares)
            if abs(g2) <= outer_tol:
                return equilibrium_at(x2, mus, shares, iterations, g2)
            if g2 > 0.0:
                lo = x2
            else:
                hi = x2
            x0, g0, x1, g1 = x1, g1, x2, g2
            if hi - lo <= 4.0 * math.ulp(hi):
                break
    except SolverError as err:
        return _failed_equilibrium(model, iterations, err.residual)

    return _failed_equilibrium(model, iterations, best[0] if best else _NAN)


def post_merger_model(model: FirmModel, merger: MergerSpec) -> FirmModel:
    """Replace the merging firms with one firm of type T_A + T_B.

    No synergy: types add exactly.  The merged entity keeps firm_a's id.
    """
    for f in (merger.firm_a, merger.firm_b):
        if f not in model.firm_types:
            raise ValueError(f"unknown firm {f!r}")
    merged: dict[str, float] = {}
    for f, t in model.firm_types.items():
        if f == merger.firm_a:
            merged[f] = t + model.firm_types[merger.firm_b]
        elif f != merger.firm_b:
            merged[f] = t
    return FirmModel(merged, model.params, h0=model.h0, v0=model.v0)


def prices_from_equilibrium(market: Market, eq: Equilibrium) -> list[float]:
    """Product prices implied by equilibrium markups, ordered as market.products.

    MNL: p_j = c_j + mu_f/alpha.  CES: p_j = c_j / (1 - mu_f/sigma).
    """
    if not eq.diagnostics.converged:
        raise ValueError("cannot price a non-converged equilibrium")
    params = market.params
    prices: list[float] = []
    for prod in market.products:
        mu = eq.mu[prod.firm]
        if params.kind is DemandKind.MNL:
            prices.append(prod.cost + mu / params.price_response)
        else:
            sigma = params.price_response
            if mu >= sigma:
                raise ValueError(f"CES markup {mu} of firm {prod.firm!r} reaches sigma")
            prices.append(prod.cost / (1.0 - mu / sigma))
    return prices


def delta_cs_actual(pre: Equilibrium, post: Equilibrium) -> float:
    """Exact consumer-surplus change V0 (log H_post - log H_pre)."""
    if not (pre.diagnostics.converged and post.diagnostics.converged):
        raise ValueError("both equilibria must be converged")
    if abs(pre.v0 - post.v0) > 1e-9 * max(1.0, abs(pre.v0)):
        raise ValueError(f"mismatched monetary scales: {pre.v0} vs {post.v0}")
    return pre.v0 * math.log(post.h / pre.h)


def market_to_dict(market: Market) -> dict:
    return {
        "demand": market.params.kind.value,
        "price_response": market.params.price_response,
        "scale": market.params.scale,
        "h0": market.h0,
        "products": [
            {"id": p.id, "firm": p.firm, "v": p.quality, "c": p.cost}
            for p in market.products
        ],
    }


def market_from_dict(payload: dict) -> Market:
    """Parse the market wire format.

    Schema: {"demand": "mnl"|"ces", "price_response": number, "scale": number,
    "h0": number, "products": [{"id": str, "firm": str, "v": number,
    "c": number}, ...]}.
    """
    try:
        params = DemandParams(
            DemandKind(payload["demand"]),
            float(payload["price_response"]),
            float(payload["scale"]),
        )
        products = tuple(
            Product(str(p["id"]), str(p["firm"]), float(p["v"]), float(p["c"]))
            for p in payload["products"]
        )
        h0 = float(payload.get("h0", 1.0))
    except (KeyError, TypeError) as err:
        raise ValueError(f"malformed market payload: {err}") from err
    return Market(products, params, h0=h0)


def firm_model_to_dict(model: FirmModel) -> dict:
    return {
        "demand": model.params.kind.value,
        "price_response": model.params.price_response,
        "scale": model.params.scale,
        "h0": model.h0,
        "v0": model.v0,
        "firm_types": dict(model.firm_types),
    }


def firm_model_from_dict(payload: dict) -> FirmModel:
    try:
        params = DemandParams(
            DemandKind(payload["demand"]),
            float(payload["price_response"]),
            float(payload["scale"]),
        )
        types = {str(f): float(t) for f, t in payload["firm_types"].items()}
        h0 = float(payload.get("h0", 1.0))
        v0 = payload.get("v0")
    except (KeyError, TypeError, AttributeError) as err:
        raise ValueError(f"malformed model payload: {err}") from err
    scale = monetary_scale(params) if v0 is None else float(v0)
    return FirmModel(types, params, h0=h0, v0=scale)


def equilibrium_to_dict(eq: Equilibrium) -> dict:
    return {
        "h": eq.h,
        "mu": dict(eq.mu),
        "shares": dict(eq.shares.firm_shares),
        "outside_share": eq.shares.outside_share,
        "basis": eq.shares.basis,
        "profits": dict(eq.profits),
        "cs": eq.cs,
        "v0": eq.v0,
        "diagnostics": {
            "iterations": eq.diagnostics.iterations,
            "residual": eq.diagnostics.residual,
            "converged": eq.diagnostics.converged,
        },
    }
