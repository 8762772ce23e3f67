"""Shared random-instance generators for the test suite."""

import numpy as np

from mergerscreen import DemandKind, DemandParams, FirmModel, Market, Product, v0


def random_firm_model(rng, kind):
    n = int(rng.integers(1, 8))
    types = {f"f{i}": float(np.exp(rng.uniform(-2.0, 3.0))) for i in range(n)}
    if kind is DemandKind.MNL:
        params = DemandParams(kind, float(rng.uniform(0.5, 5.0)), float(rng.uniform(0.5, 20.0)))
    else:
        params = DemandParams(kind, float(rng.uniform(1.3, 6.0)), float(rng.uniform(0.5, 20.0)))
    return FirmModel(types, params, h0=1.0, v0=v0(params))


def random_market(rng, kind, max_firms=5, max_products=4):
    products = []
    pid = 0
    for i in range(int(rng.integers(1, max_firms))):
        for _ in range(int(rng.integers(1, max_products))):
            cost = float(rng.uniform(0.3, 2.0))
            if kind is DemandKind.MNL:
                quality = float(rng.uniform(-1.0, 2.0))
            else:
                quality = float(rng.uniform(0.2, 3.0))
            products.append(Product(f"p{pid}", f"f{i}", quality, cost))
            pid += 1
    if kind is DemandKind.MNL:
        params = DemandParams(kind, float(rng.uniform(0.5, 4.0)), float(rng.uniform(1.0, 10.0)))
    else:
        params = DemandParams(kind, float(rng.uniform(1.5, 5.0)), float(rng.uniform(1.0, 10.0)))
    return Market(tuple(products), params)


def random_params(rng, kind):
    if kind is DemandKind.MNL:
        return DemandParams(kind, float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.5, 10.0)))
    return DemandParams(kind, float(rng.uniform(1.3, 6.0)), float(rng.uniform(0.5, 10.0)))


def random_share_config(rng, max_firms=4, max_products=3, total_cap=0.95):
    """Random multiproduct shares: (product share map, ownership, firm share map)."""
    n_firms = int(rng.integers(2, max_firms + 1))
    counts = [int(rng.integers(1, max_products + 1)) for _ in range(n_firms)]
    raw = rng.uniform(0.05, 1.0, sum(counts) + 1)
    scaled = raw / raw.sum() * total_cap
    product_shares, ownership, firm_shares = {}, {}, {}
    idx = 0
    for i, count in enumerate(counts):
        firm = f"f{i}"
        total = 0.0
        for _ in range(count):
            pid = f"p{idx}"
            product_shares[pid] = float(scaled[idx])
            ownership[pid] = firm
            total += product_shares[pid]
            idx += 1
        firm_shares[firm] = total
    return product_shares, ownership, firm_shares
