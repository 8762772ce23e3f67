"""First-order merger-harm approximations from pre-merger shares.

The centerpiece maps concentration to welfare: for a merger of firms A and B
without synergies,

    dCS ~= -V0 * rho1 * rho2 * dHHI,

with dHHI = 2 s_A s_B computed at pre-merger shares (quantity shares under
MNL, revenue shares under CES), V0 the monetary scaling factor, rho1 a
cross-firm factor 1/((q - s_A)(q - s_B)), and rho2 a within-firm factor that
only departs from 1 when the merging firms own multiple products.  Here
q = 1 under MNL and q = sigma/(sigma - 1) under CES.

The same harm number can be written with firm-level diversion ratios
(-2 V0 rho2 D_ab D_ba, an exact algebraic identity) or, given a merger
pass-through matrix, as a kappa-weighted double sum (MNL only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .demand import (
    DemandKind,
    DemandParams,
    ProductShareVector,
    ShareVector,
    delta_hhi,
    diversion_quantity,
    diversion_revenue,
    share_basis,
)
from .equilibrium import MergerSpec


def _pole(params: DemandParams) -> float:
    """Upper share pole q: 1 (MNL) or sigma/(sigma-1) (CES)."""
    if params.kind is DemandKind.MNL:
        return 1.0
    sigma = params.price_response
    return sigma / (sigma - 1.0)


def _share_ratio(share: float, q: float) -> float:
    # f(x) = x / (q - x), increasing and convex on [0, q).
    return share / (q - share)


def _merging_shares(firm_shares: ShareVector, merger: MergerSpec) -> tuple[float, float]:
    for f in (merger.firm_a, merger.firm_b):
        if f not in firm_shares.firm_shares:
            raise ValueError(f"unknown firm {f!r}")
    return firm_shares.firm_shares[merger.firm_a], firm_shares.firm_shares[merger.firm_b]


@dataclass(frozen=True)
class PassThroughMatrix:
    """Merger pass-through kappa over the merging firms' products.

    ``products`` fixes the row/column ordering of ``kappa``; the entry
    kappa[j][i] is the pass-through of product i's pricing pressure into
    product j's price.
    """

    kappa: tuple[tuple[float, ...], ...]
    products: tuple[str, ...]

    def __post_init__(self) -> None:
        n = len(self.products)
        if len(self.kappa) != n or any(len(row) != n for row in self.kappa):
            raise ValueError(f"kappa must be {n}x{n} to match the product list")

    @classmethod
    def identity(cls, products: tuple[str, ...]) -> "PassThroughMatrix":
        n = len(products)
        rows = tuple(tuple(1.0 if i == j else 0.0 for i in range(n)) for j in range(n))
        return cls(rows, products)


@dataclass(frozen=True)
class ApproxReport:
    """Everything a screening memo needs, computed from pre-merger shares only.

    ``upp`` is in price units under the unit-pre-merger-price convention, so
    it coincides numerically with ``guppi``.
    """

    demand: DemandKind
    delta_hhi: float
    v0: float
    rho1: float
    rho2: float
    dcs_prop1: float
    dcs_ns: float
    dcs_corollary: float
    upp: dict[str, float]
    guppi: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "demand": self.demand.value,
            "delta_hhi": self.delta_hhi,
            "v0": self.v0,
            "rho1": self.rho1,
            "rho2": self.rho2,
            "dcs_prop1": self.dcs_prop1,
            "dcs_ns": self.dcs_ns,
            "dcs_corollary": self.dcs_corollary,
            "upp": dict(self.upp),
            "guppi": dict(self.guppi),
        }


def rho1(share_a: float, share_b: float, params: DemandParams) -> float:
    """Cross-firm scaling factor 1 / ((q - s_A)(q - s_B))."""
    q = _pole(params)
    for s in (share_a, share_b):
        if s < 0.0 or s >= q:
            raise ValueError(f"share {s} outside [0, {q})")
    return 1.0 / ((q - share_a) * (q - share_b))


def rho2(
    product_shares: ProductShareVector, merger: MergerSpec, params: DemandParams
) -> float:
    """Within-firm scaling factor: half-sum of product-to-firm share ratios.

    For each merging firm, sum f(s_j)/f(s_f) over its products with
    f(x) = x/(q - x); average the two firm sums.  Single-product firms give
    exactly 1; a zero-share firm contributes its continuous limit 1.
    """
    q = _pole(params)
    halves = []
    for firm in (merger.firm_a, merger.firm_b):
        prods = product_shares.products_of(firm)
        if not prods:
            raise ValueError(f"merging firm {firm!r} owns no products")
        total = product_shares.firm_total(firm)
        if total >= q:
            raise ValueError(f"share {total} of firm {firm!r} reaches the pole {q}")
        if total == 0.0:
            halves.append(1.0)
            continue
        denom = _share_ratio(total, q)
        halves.append(
            sum(_share_ratio(product_shares.product_shares[p], q) for p in prods) / denom
        )
    return 0.5 * (halves[0] + halves[1])


def upp(
    product_shares: ProductShareVector,
    firm_shares: ShareVector,
    merger: MergerSpec,
    params: DemandParams,
) -> dict[str, float]:
    """Upward pricing pressure of every merging product, keyed by product id.

    MNL (closed form, price units): UPP_j = s_B / (alpha (1-s_B)(1-s_j)) for
    j owned by A, and symmetrically for B.  CES: pressure is computed as
    GUPPI, which equals UPP under the unit pre-merger price convention.
    """
    product_shares.check_consistent(firm_shares)
    _merging_shares(firm_shares, merger)
    out: dict[str, float] = {}
    for firm, partner in ((merger.firm_a, merger.firm_b), (merger.firm_b, merger.firm_a)):
        prods = product_shares.products_of(firm)
        if not prods:
            raise ValueError(f"merging firm {firm!r} owns no products")
        s_partner = firm_shares.firm_shares[partner]
        for pid in prods:
            s_j = product_shares.product_shares[pid]
            if params.kind is DemandKind.MNL:
                if s_j >= 1.0 or s_partner >= 1.0:
                    raise ValueError("shares must be below 1")
                out[pid] = s_partner / (
                    params.price_response * (1.0 - s_partner) * (1.0 - s_j)
                )
            else:
                out[pid] = guppi_ces(s_j, s_partner, params.price_response)
    return out


def guppi_ces(share_j_rev: float, share_b_rev: float, sigma: float) -> float:
    """Gross upward pricing pressure index under CES demand.

    (sigma-1) s_B^R / ((1 + (1-s_j^R)(sigma-1)) (1 + (1-s_B^R)(sigma-1))).
    """
    if sigma <= 1.0:
        raise ValueError(f"sigma must exceed 1, got {sigma}")
    for s in (share_j_rev, share_b_rev):
        if s < 0.0 or s >= 1.0:
            raise ValueError(f"revenue share {s} outside [0, 1)")
    return ((sigma - 1.0) * share_b_rev) / (
        (1.0 + (1.0 - share_j_rev) * (sigma - 1.0))
        * (1.0 + (1.0 - share_b_rev) * (sigma - 1.0))
    )


def delta_cs_ns(
    firm_shares: ShareVector, merger: MergerSpec, params: DemandParams, v0: float
) -> float:
    """Share-independent benchmark: -V0 dHHI (MNL), -V0 (sigma-1)/sigma dHHI^R (CES)."""
    s_a, s_b = _merging_shares(firm_shares, merger)
    dh = delta_hhi(s_a, s_b)
    if params.kind is DemandKind.MNL:
        return -v0 * dh
    sigma = params.price_response
    return -v0 * (sigma - 1.0) / sigma * dh


def delta_cs_prop1(
    product_shares: ProductShareVector,
    firm_shares: ShareVector,
    merger: MergerSpec,
    params: DemandParams,
    v0: float,
) -> ApproxReport:
    """Full first-order report: -V0 rho1 rho2 dHHI plus companion statistics.

    Harm carries a negative sign.  All quantities are evaluated at pre-merger
    shares; for single-product merging firms rho2 = 1 and the formula
    collapses to -V0 dHHI / ((q - s_j)(q - s_k)).
    """
    expected_basis = share_basis(params.kind)
    if firm_shares.basis != expected_basis:
        raise ValueError(
            f"{params.kind.value} requires {expected_basis} shares, got {firm_shares.basis}"
        )
    product_shares.check_consistent(firm_shares)
    s_a, s_b = _merging_shares(firm_shares, merger)
    dh = delta_hhi(s_a, s_b)
    r1 = rho1(s_a, s_b, params)
    r2 = rho2(product_shares, merger, params)
    pressures = upp(product_shares, firm_shares, merger, params)
    return ApproxReport(
        demand=params.kind,
        delta_hhi=dh,
        v0=v0,
        rho1=r1,
        rho2=r2,
        dcs_prop1=-v0 * r1 * r2 * dh,
        dcs_ns=delta_cs_ns(firm_shares, merger, params, v0),
        dcs_corollary=delta_cs_diversion(firm_shares, product_shares, merger, params, v0),
        upp=pressures,
        guppi=dict(pressures),
    )


def delta_cs_diversion(
    firm_shares: ShareVector,
    product_shares: ProductShareVector,
    merger: MergerSpec,
    params: DemandParams,
    v0: float,
) -> float:
    """Harm via firm-level diversion: -2 V0 rho2 D_{A->B} D_{B->A}.

    CES uses the adjusted revenue diversion ratios (pole sigma/(sigma-1)
    replaces 1 in the denominator).  Algebraically identical to the
    rho1-based formula.
    """
    s_a, s_b = _merging_shares(firm_shares, merger)
    r2 = rho2(product_shares, merger, params)
    if params.kind is DemandKind.MNL:
        d_ab = diversion_quantity(s_a, s_b)
        d_ba = diversion_quantity(s_b, s_a)
    else:
        sigma = params.price_response
        d_ab = diversion_revenue(s_a, s_b, adjusted=True, sigma=sigma)
        d_ba = diversion_revenue(s_b, s_a, adjusted=True, sigma=sigma)
    return -2.0 * v0 * r2 * d_ab * d_ba


def delta_cs_passthrough(
    product_shares: ProductShareVector,
    firm_shares: ShareVector,
    merger: MergerSpec,
    params: DemandParams,
    kappa: PassThroughMatrix,
    n: float | None = None,
) -> float:
    """Harm when price effects are kappa-weighted pricing pressures (MNL only).

    With dp = kappa UPP, total harm is

        -(N/alpha) rho1 s_A s_B * sum_i [f(s_i)/f(s_f)] (sum_j kappa_ji s_j) / s_i

    summing i over both firms' products (f is i's owner, j ranges over all
    merging products).  kappa = identity reduces to the rho1 rho2 formula.
    """
    if params.kind is not DemandKind.MNL:
        raise ValueError("pass-through harm is only defined for MNL demand")
    product_shares.check_consistent(firm_shares)
    prods_a = product_shares.products_of(merger.firm_a)
    prods_b = product_shares.products_of(merger.firm_b)
    ordered = prods_a + prods_b
    if set(kappa.products) != set(ordered) or len(kappa.products) != len(ordered):
        raise ValueError("kappa product list must match the merging firms' products")
    col = {pid: i for i, pid in enumerate(kappa.products)}
    market_size = params.scale if n is None else n
    s_a, s_b = _merging_shares(firm_shares, merger)
    pref = (market_size / params.price_response) * (
        (s_a * s_b) / ((1.0 - s_a) * (1.0 - s_b))
    )
    total = 0.0
    for firm, prods in ((merger.firm_a, prods_a), (merger.firm_b, prods_b)):
        s_f = product_shares.firm_total(firm)
        f_firm = _share_ratio(s_f, 1.0)
        for pid in prods:
            s_i = product_shares.product_shares[pid]
            if s_i <= 0.0:
                raise ValueError(f"product {pid!r} needs a positive share")
            weighted = sum(
                kappa.kappa[col[j]][col[pid]] * product_shares.product_shares[j]
                for j in ordered
            )
            total += (_share_ratio(s_i, 1.0) / f_firm) * weighted / s_i
    return -pref * total


@dataclass(frozen=True)
class Rho1Bounds:
    """Extrema of rho1 over the MNL share set {s_A + s_B <= c0, 2 s_A s_B = d0}."""

    lower: float
    upper: float
    argmin: tuple[float, float]
    argmax: tuple[float, float]


def rho1_bounds(c0: float, delta0: float) -> Rho1Bounds:
    """Closed-form rho1 range compatible with a concentration change (MNL).

    Feasibility requires c0^2/2 >= delta0 > 0.  The minimum sits at the
    symmetric point s_A = s_B = sqrt(delta0/2); the maximum at the most
    asymmetric split of c0 along the hyperbola, giving

        lower = 1 / (1 - sqrt(delta0/2))^2,   upper = 2 / (delta0 - 2 c0 + 2).
    """
    if delta0 <= 0.0:
        raise ValueError(f"delta0 must be positive, got {delta0}")
    if c0 * c0 / 2.0 < delta0:
        raise ValueError(f"infeasible: need c0^2/2 >= delta0, got c0={c0}, delta0={delta0}")
    sym = math.sqrt(delta0 / 2.0)
    root = math.sqrt(c0 * c0 - 2.0 * delta0)
    s_lo, s_hi = 0.5 * (c0 - root), 0.5 * (c0 + root)
    if s_hi >= 1.0:
        raise ValueError(f"largest feasible share {s_hi} reaches the MNL pole")
    return Rho1Bounds(
        lower=1.0 / (1.0 - sym) ** 2,
        upper=2.0 / (delta0 - 2.0 * c0 + 2.0),
        argmin=(sym, sym),
        argmax=(s_lo, s_hi),
    )


def rho1_bounds_rows(c0: float, delta0_grid) -> list[dict[str, float]]:
    """Tabulate (delta0, lower, upper) over a grid, for plotting."""
    rows = []
    for d0 in np.asarray(delta0_grid, dtype=float):
        bounds = rho1_bounds(c0, float(d0))
        rows.append({"delta0": float(d0), "lower": bounds.lower, "upper": bounds.upper})
    return rows
