"""Pydantic request/response models for the HTTP API.

Domain invariants (share adding-up, margin ranges, solver domains) are
enforced by the library; these models only pin the wire shapes.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict


class HealthResponse(BaseModel):
    status: str
    version: str


class ProductIn(BaseModel):
    id: str
    firm: str
    v: float
    c: float


class MarketIn(BaseModel):
    demand: Literal["mnl", "ces"]
    price_response: float
    scale: float
    h0: float = 1.0
    products: list[ProductIn]


class ModelIn(BaseModel):
    """Firm-level model; the output of /calibrate is accepted verbatim."""

    model_config = ConfigDict(extra="ignore", protected_namespaces=())

    demand: Literal["mnl", "ces"]
    price_response: float
    scale: float
    h0: float = 1.0
    v0: Optional[float] = None
    firm_types: dict[str, float]
    mu: Optional[dict[str, float]] = None
    implied_costs: Optional[dict[str, float]] = None
    shares: Optional[dict[str, float]] = None
    outside_share: Optional[float] = None
    basis: Optional[Literal["quantity", "revenue"]] = None


class CalibrateRequest(BaseModel):
    demand: Literal["mnl", "ces"]
    shares: dict[str, float]
    outside: Optional[float] = None
    margin_firm: str
    margin: float
    scale: Optional[float] = None


class EquilibriumRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: Optional[ModelIn] = None
    market: Optional[MarketIn] = None


class MergeRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: ModelIn
    firm_a: str
    firm_b: str


class ApproxRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model: ModelIn
    firm_a: str
    firm_b: str
    product_shares: Optional[dict[str, float]] = None
    ownership: Optional[dict[str, str]] = None


class McRequest(BaseModel):
    demand: Literal["mnl", "ces"]
    reps: int = 2000
    n_firms: int = 6
    margin_lo: float = 0.3
    margin_hi: float = 0.6
    seed: int = 0
    upp_scale: float = 1.0
    dirichlet_alpha: Optional[list[float]] = None
    workers: int = 1
    include_records: bool = True
    include_figures: bool = True


class RhoBoundsRequest(BaseModel):
    c0: float
    delta0: list[float]


class RhoBoundsRow(BaseModel):
    delta0: float
    lower: float
    upper: float


class RhoBoundsResponse(BaseModel):
    c0: float
    rows: list[RhoBoundsRow]
