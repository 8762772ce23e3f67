"""Demand-side primitives for differentiated-products Bertrand markets.

Closed-form share, concentration, margin, and diversion identities for the
multinomial logit (MNL) and CES demand systems.  Everything here is a pure
function of shares and parameters; the equilibrium machinery lives in
``mergerscreen.equilibrium``.

Shares are always stored *including* the outside option.  The renormalized
inside shares are available through :func:`inside_shares` as a view; they are
never stored as state.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from enum import Enum
from typing import Mapping

import numpy as np

# Tolerance for the adding-up check outside + sum(firm shares) == 1.
# Constructed share vectors come from exact normalization, so this is tight.
ADDING_UP_TOL = 1e-12

QUANTITY = "quantity"
REVENUE = "revenue"


class DemandKind(str, Enum):
    MNL = "mnl"
    CES = "ces"


def share_basis(kind: DemandKind) -> str:
    """Natural share basis: quantity shares under MNL, revenue shares under CES."""
    return QUANTITY if kind is DemandKind.MNL else REVENUE


@dataclass(frozen=True)
class DemandParams:
    """A demand system and its two scalar parameters.

    ``price_response`` is alpha (MNL) or sigma (CES); ``scale`` is the market
    size N (MNL) or the consumer budget Y (CES).
    """

    kind: DemandKind
    price_response: float
    scale: float

    def __post_init__(self) -> None:
        if self.price_response <= 0.0:
            raise ValueError(f"price_response must be positive, got {self.price_response}")
        if self.kind is DemandKind.CES and self.price_response <= 1.0:
            raise ValueError(f"CES requires sigma > 1, got {self.price_response}")
        if self.scale <= 0.0:
            raise ValueError(f"scale must be positive, got {self.scale}")


def v0(params: DemandParams) -> float:
    """Monetary scaling factor: N/alpha (MNL) or Y/(sigma - 1) (CES).

    Converts the dimensionless aggregator log-change into money-metric
    consumer surplus.
    """
    if params.kind is DemandKind.MNL:
        return params.scale / params.price_response
    return params.scale / (params.price_response - 1.0)


@dataclass(frozen=True)
class ShareVector:
    """Firm shares plus the outside-option share, summing to one.

    ``basis`` records whether the entries are quantity shares (MNL) or revenue
    shares (CES); report-level code uses it to reject mismatched pairings.
    Pass ``validate=False`` only for diagnostic payloads from failed solves.
    """

    firm_shares: dict[str, float]
    outside_share: float
    basis: str = QUANTITY
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool) -> None:
        if self.basis not in (QUANTITY, REVENUE):
            raise ValueError(f"unknown share basis {self.basis!r}")
        if not validate:
            return
        for firm, share in self.firm_shares.items():
            if not 0.0 <= share <= 1.0:
                raise ValueError(f"share of firm {firm!r} out of [0, 1]: {share}")
        if not 0.0 <= self.outside_share <= 1.0:
            raise ValueError(f"outside share out of [0, 1]: {self.outside_share}")
        total = self.outside_share + sum(self.firm_shares.values())
        if abs(total - 1.0) > ADDING_UP_TOL:
            raise ValueError(f"shares must sum to 1, got {total!r}")

    @classmethod
    def from_firm_shares(
        cls, firm_shares: Mapping[str, float], basis: str = QUANTITY
    ) -> "ShareVector":
        """Build a vector assigning the residual 1 - sum to the outside option."""
        inside = dict(firm_shares)
        return cls(inside, 1.0 - sum(inside.values()), basis)

    def total_inside(self) -> float:
        return sum(self.firm_shares.values())


def inside_shares(shares: ShareVector) -> dict[str, float]:
    """Shares renormalized to exclude the outside option: s_f / (1 - s0).

    A view over a :class:`ShareVector`; the stored state always includes the
    outside option.
    """
    denom = 1.0 - shares.outside_share
    if denom <= 0.0:
        raise ValueError("no inside demand: outside share is 1")
    return {f: s / denom for f, s in shares.firm_shares.items()}


@dataclass(frozen=True)
class ProductShareVector:
    """Product-level shares with a product -> firm ownership map."""

    product_shares: dict[str, float]
    ownership: dict[str, str]

    def __post_init__(self) -> None:
        for pid, share in self.product_shares.items():
            if not 0.0 <= share <= 1.0:
                raise ValueError(f"share of product {pid!r} out of [0, 1]: {share}")
            if pid not in self.ownership:
                raise ValueError(f"product {pid!r} has no owner")
        for pid in self.ownership:
            if pid not in self.product_shares:
                raise ValueError(f"ownership lists unknown product {pid!r}")

    def products_of(self, firm: str) -> list[str]:
        return [p for p, f in self.ownership.items() if f == firm]

    def firm_total(self, firm: str) -> float:
        return sum(self.product_shares[p] for p in self.products_of(firm))

    def check_consistent(self, firm_shares: ShareVector, tol: float = ADDING_UP_TOL) -> None:
        """Verify per-firm product sums match the companion firm-share vector."""
        for firm in {f for f in self.ownership.values()}:
            if firm not in firm_shares.firm_shares:
                raise ValueError(f"ownership references unknown firm {firm!r}")
            total = self.firm_total(firm)
            if abs(total - firm_shares.firm_shares[firm]) > tol:
                raise ValueError(
                    f"product shares of firm {firm!r} sum to {total}, "
                    f"expected {firm_shares.firm_shares[firm]}"
                )


def demand(
    prices, qualities, params: DemandParams, h0: float = 1.0
) -> np.ndarray:
    """Quantities demanded at the given prices.

    MNL: q_j = N exp(v_j - alpha p_j) / (H0 + sum_l exp(v_l - alpha p_l))
    CES: q_j = Y v_j p_j^{-sigma} / (H0 + sum_l v_l p_l^{1-sigma})
    """
    p = np.asarray(prices, dtype=float)
    v = np.asarray(qualities, dtype=float)
    if p.shape != v.shape:
        raise ValueError(f"prices and qualities differ in length: {p.shape} vs {v.shape}")
    if np.any(p <= 0.0):
        raise ValueError("prices must be positive")
    if h0 < 0.0:
        raise ValueError(f"h0 must be nonnegative, got {h0}")
    if params.kind is DemandKind.MNL:
        h = np.exp(v - params.price_response * p)
        return params.scale * h / (h0 + h.sum())
    if np.any(v <= 0.0):
        raise ValueError("CES qualities must be positive")
    h = v * p ** (1.0 - params.price_response)
    return params.scale * (v * p**-params.price_response) / (h0 + h.sum())


def hhi(shares: ShareVector) -> float:
    """Herfindahl-Hirschman index, sum of squared firm shares, kept in [0, 1].

    The outside option is excluded from the sum and no 100^2 rescaling is
    applied.
    """
    return sum(s * s for s in shares.firm_shares.values())


def delta_hhi(share_a: float, share_b: float) -> float:
    """Concentration change 2 s_A s_B from merging A and B, at pre-merger shares."""
    for s in (share_a, share_b):
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"share out of [0, 1]: {s}")
    return 2.0 * share_a * share_b


def diversion_quantity(share_j: float, share_k: float) -> float:
    """Quantity diversion ratio s_k / (1 - s_j) from product j to product k."""
    if share_j >= 1.0:
        raise ValueError(f"diverting share must be below 1, got {share_j}")
    return share_k / (1.0 - share_j)


def diversion_revenue(
    share_j_rev: float,
    share_l_rev: float,
    *,
    adjusted: bool = False,
    sigma: float | None = None,
) -> float:
    """Revenue diversion ratio from product j to product l.

    Unadjusted: s_l^R / (1 - s_j^R).  Adjusted (CES welfare calculations):
    s_l^R / (sigma/(sigma-1) - s_j^R), which is strictly smaller.
    """
    if adjusted:
        if sigma is None or sigma <= 1.0:
            raise ValueError("adjusted revenue diversion requires sigma > 1")
        denom = sigma / (sigma - 1.0) - share_j_rev
    else:
        denom = 1.0 - share_j_rev
    if denom <= 0.0:
        raise ValueError(f"nonpositive diversion denominator: {denom}")
    return share_l_rev / denom


def equilibrium_margin(firm_share: float, params: DemandParams) -> float:
    """Margin a firm charges in equilibrium as a function of its share.

    MNL firms charge a constant absolute margin p - c = 1/(alpha (1 - s_f));
    CES firms a constant relative margin m = 1/(1 + (1 - s_f^R)(sigma - 1)).
    """
    if firm_share >= 1.0:
        raise ValueError(f"firm share must be below 1, got {firm_share}")
    if params.kind is DemandKind.MNL:
        return 1.0 / (params.price_response * (1.0 - firm_share))
    return 1.0 / (1.0 + (1.0 - firm_share) * (params.price_response - 1.0))


def ces_elasticity_factor(share_j_rev: float, sigma: float) -> float:
    """The factor 1 + 1/eps_jj under CES demand.

    With revenue elasticity eps^R = -(1 - s_j^R)(sigma - 1) and
    eps_jj = eps^R - 1 this equals
    (1 - s_j^R)(sigma - 1) / (1 + (1 - s_j^R)(sigma - 1)).
    """
    if sigma <= 1.0:
        raise ValueError(f"sigma must exceed 1, got {sigma}")
    if share_j_rev >= 1.0:
        raise ValueError(f"revenue share must be below 1, got {share_j_rev}")
    rev_el = (1.0 - share_j_rev) * (sigma - 1.0)
    return rev_el / (1.0 + rev_el)
