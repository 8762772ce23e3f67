import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mergerscreen import (
    CalibrationInput,
    DemandKind,
    DemandParams,
    MergerSpec,
    PassThroughMatrix,
    ProductShareVector,
    ShareVector,
    calibrate_mnl,
    delta_cs_actual,
    delta_cs_diversion,
    delta_cs_ns,
    delta_cs_passthrough,
    delta_cs_prop1,
    diversion_quantity,
    diversion_revenue,
    equilibrium_margin,
    guppi_ces,
    post_merger_model,
    pre_merger_equilibrium,
    rho1,
    rho1_bounds,
    rho2,
    solve_equilibrium,
    upp,
)
from mergerscreen.demand import QUANTITY, REVENUE, ces_elasticity_factor

from conftest import random_params, random_share_config

MNL1 = DemandParams(DemandKind.MNL, 1.0, 1.0)
CES2 = DemandParams(DemandKind.CES, 2.0, 1.0)
AB = MergerSpec("a", "b")


def single_product_config(share_a, share_b, basis=QUANTITY, extra=None):
    firms = {"a": share_a, "b": share_b}
    firms.update(extra or {})
    sv = ShareVector.from_firm_shares(firms, basis)
    psv = ProductShareVector(dict(firms), {f: f for f in firms})
    return psv, sv


def upp_oracle(product_shares, firm_shares, merger, params):
    """Definitional UPP: sum over the partner's products of margin x diversion."""
    out = {}
    for firm, partner in ((merger.firm_a, merger.firm_b), (merger.firm_b, merger.firm_a)):
        margin = equilibrium_margin(firm_shares.firm_shares[partner], params)
        for pid in product_shares.products_of(firm):
            s_j = product_shares.product_shares[pid]
            if params.kind is DemandKind.MNL:
                total = sum(
                    margin * diversion_quantity(s_j, product_shares.product_shares[l])
                    for l in product_shares.products_of(partner)
                )
            else:
                total = ces_elasticity_factor(s_j, params.price_response) * sum(
                    margin * diversion_revenue(s_j, product_shares.product_shares[l])
                    for l in product_shares.products_of(partner)
                )
            out[pid] = total
    return out


class TestUpp:
    def test_mnl_closed_form(self):
        psv, sv = single_product_config(0.3, 0.2)
        result = upp(psv, sv, AB, MNL1)
        # 0.2 / (1 * 0.8 * 0.7)
        assert result["a"] == pytest.approx(0.35714285714285715, abs=1e-15)

    def test_zero_partner_share_gives_zero(self):
        psv, sv = single_product_config(0.3, 0.0)
        assert upp(psv, sv, AB, MNL1)["a"] == 0.0

    def test_symmetric_firms_equal_pressure(self):
        psv, sv = single_product_config(0.25, 0.25)
        result = upp(psv, sv, AB, MNL1)
        assert result["a"] == result["b"]

    @pytest.mark.parametrize("kind", [DemandKind.MNL, DemandKind.CES])
    def test_matches_definitional_sum(self, kind):
        rng = np.random.default_rng(8)
        basis = QUANTITY if kind is DemandKind.MNL else REVENUE
        for _ in range(200):
            product_shares, ownership, firm_shares = random_share_config(rng)
            psv = ProductShareVector(product_shares, ownership)
            sv = ShareVector.from_firm_shares(firm_shares, basis)
            params = random_params(rng, kind)
            merger = MergerSpec("f0", "f1")
            closed = upp(psv, sv, merger, params)
            oracle = upp_oracle(psv, sv, merger, params)
            for pid, value in closed.items():
                assert value == pytest.approx(oracle[pid], abs=1e-12)


class TestGuppiCes:
    def test_closed_form_value(self):
        # 1 * 0.2 / (1.7 * 1.8)
        assert guppi_ces(0.3, 0.2, 2.0) == pytest.approx(0.06535947712418301, abs=1e-15)

    def test_zero_partner(self):
        assert guppi_ces(0.3, 0.0, 2.0) == 0.0

    def test_vanishes_as_sigma_drops_to_one(self):
        assert guppi_ces(0.3, 0.2, 1.0 + 1e-9) == pytest.approx(0.0, abs=1e-9)


class TestRho1:
    def test_mnl_small_share_limit(self):
        assert rho1(0.0, 0.0, MNL1) == 1.0

    def test_mnl_symmetric_half(self):
        assert rho1(0.5, 0.5, MNL1) == pytest.approx(4.0)

    def test_ces_small_share_limit(self):
        # ((sigma-1)/sigma)^2 at sigma = 2
        assert rho1(0.0, 0.0, CES2) == pytest.approx(0.25)

    def test_pole_rejected(self):
        with pytest.raises(ValueError):
            rho1(1.0, 0.2, MNL1)

    def test_increasing_and_convex_in_each_share(self):
        grid = np.linspace(0.0, 0.9, 46)
        for params in (MNL1, CES2):
            values = [rho1(float(s), 0.3, params) for s in grid]
            diffs = np.diff(values)
            assert np.all(diffs > 0)
            assert np.all(np.diff(diffs) > 0)  # second difference > 0: convex

    def test_increasing_in_asymmetry_at_fixed_delta_hhi(self):
        d0 = 0.04
        sym = math.sqrt(d0 / 2.0)
        spreads = np.linspace(0.0, 0.5, 20)
        values = []
        for eps in spreads:
            sa = sym * (1 - eps)
            sb = d0 / (2 * sa)
            values.append(rho1(sa, sb, MNL1))
        assert all(b > a for a, b in zip(values, values[1:]))


class TestRho2:
    def test_single_product_firms_give_one(self):
        psv, sv = single_product_config(0.3, 0.2)
        assert rho2(psv, AB, MNL1) == 1.0

    def test_two_way_split_known_value(self):
        # firm shares 0.2 split into two products of 0.1 each
        psv = ProductShareVector(
            {"a1": 0.1, "a2": 0.1, "b1": 0.1, "b2": 0.1},
            {"a1": "a", "a2": "a", "b1": "b", "b2": "b"},
        )
        expected = 2 * (0.1 / 0.9) / (0.2 / 0.8)  # one firm's sum: 0.888...
        assert rho2(psv, AB, MNL1) == pytest.approx(expected, abs=1e-12)
        assert rho2(psv, AB, MNL1) == pytest.approx(0.888888888888889, abs=1e-12)

    def test_vanishing_shares_approach_one(self):
        for params in (MNL1, CES2):
            psv = ProductShareVector(
                {"a1": 5e-7, "a2": 5e-7, "b1": 1e-6},
                {"a1": "a", "a2": "a", "b1": "b"},
            )
            assert rho2(psv, AB, params) == pytest.approx(1.0, abs=1e-5)

    def test_zero_share_firm_contributes_limit(self):
        psv, sv = single_product_config(0.3, 0.0)
        assert rho2(psv, AB, MNL1) == 1.0

    def test_decreasing_in_firm_share_at_fixed_fractions(self):
        # products stay constant fractions lambda = (0.3, 0.7) of the firm share
        for params in (MNL1, CES2):
            values = []
            for s_f in np.linspace(0.05, 0.6, 12):
                psv = ProductShareVector(
                    {"a1": 0.3 * s_f, "a2": 0.7 * s_f, "b": 0.1},
                    {"a1": "a", "a2": "a", "b": "b"},
                )
                values.append(rho2(psv, AB, params))
            assert all(b < a for a, b in zip(values, values[1:]))

    def test_splitting_a_product_decreases_rho2(self):
        rng = np.random.default_rng(21)
        for params in (MNL1, CES2):
            for _ in range(50):
                sa1, sa2, sb = rng.uniform(0.02, 0.2, 3)
                lam = rng.uniform(0.1, 0.9)
                whole = ProductShareVector(
                    {"a1": sa1 + sa2, "b": sb}, {"a1": "a", "b": "b"}
                )
                split = ProductShareVector(
                    {"a1": lam * (sa1 + sa2), "a2": (1 - lam) * (sa1 + sa2), "b": sb},
                    {"a1": "a", "a2": "a", "b": "b"},
                )
                assert rho2(split, AB, params) < rho2(whole, AB, params)


class TestDeltaCsProp1:
    def test_known_single_product_case(self):
        psv, sv = single_product_config(0.1, 0.1)
        report = delta_cs_prop1(psv, sv, AB, MNL1, 1.0)
        assert report.delta_hhi == pytest.approx(0.02)
        assert report.rho1 == pytest.approx(1.0 / 0.81)
        assert report.rho2 == 1.0
        assert report.dcs_prop1 == pytest.approx(-0.024691358024691357, abs=1e-15)

    def test_zero_partner_share(self):
        psv, sv = single_product_config(0.3, 0.0)
        assert delta_cs_prop1(psv, sv, AB, MNL1, 1.0).dcs_prop1 == 0.0

    def test_symmetric_in_merging_firms(self):
        psv, sv = single_product_config(0.3, 0.15)
        fwd = delta_cs_prop1(psv, sv, AB, MNL1, 1.0)
        rev = delta_cs_prop1(psv, sv, MergerSpec("b", "a"), MNL1, 1.0)
        assert fwd.dcs_prop1 == pytest.approx(rev.dcs_prop1, abs=1e-15)

    def test_basis_pairing_enforced(self):
        psv, sv = single_product_config(0.3, 0.15, basis=REVENUE)
        with pytest.raises(ValueError):
            delta_cs_prop1(psv, sv, AB, MNL1, 1.0)

    def test_tracks_full_equilibrium_harm(self):
        # comparison against the exact merger simulation; the first-order
        # number is an approximation, so agreement is loose at share 0.1
        sv = ShareVector.from_firm_shares({"a": 0.1, "b": 0.1}, QUANTITY)
        cal = calibrate_mnl(CalibrationInput(sv, "a", 0.5))
        psv = ProductShareVector(dict(sv.firm_shares), {f: f for f in sv.firm_shares})
        report = delta_cs_prop1(psv, sv, AB, cal.model.params, 1.0)
        pre = pre_merger_equilibrium(cal)
        post = solve_equilibrium(post_merger_model(cal.model, AB))
        actual = delta_cs_actual(pre, post)
        assert actual < 0
        assert abs(report.dcs_prop1 - actual) / abs(actual) < 0.25


class TestDeltaCsNs:
    def test_mnl_plug_in(self):
        sv = ShareVector.from_firm_shares({"a": 0.1, "b": 0.1}, QUANTITY)
        assert delta_cs_ns(sv, AB, MNL1, 1.0) == pytest.approx(-0.02)

    def test_ces_carries_sigma_factor(self):
        sv = ShareVector.from_firm_shares({"a": 0.1, "b": 0.1}, REVENUE)
        assert delta_cs_ns(sv, AB, CES2, 1.0) == pytest.approx(-0.01)

    def test_zero_delta_hhi(self):
        sv = ShareVector.from_firm_shares({"a": 0.0, "b": 0.1}, QUANTITY)
        assert delta_cs_ns(sv, AB, MNL1, 1.0) == 0.0


class TestDiversionCorollary:
    def test_single_product_identity_with_prop1(self):
        psv, sv = single_product_config(0.1, 0.1)
        value = delta_cs_diversion(sv, psv, AB, MNL1, 1.0)
        assert value == pytest.approx(-2.0 * (0.1 / 0.9) ** 2, abs=1e-15)
        assert value == pytest.approx(
            delta_cs_prop1(psv, sv, AB, MNL1, 1.0).dcs_prop1, abs=1e-15
        )

    def test_zero_partner(self):
        psv, sv = single_product_config(0.3, 0.0)
        assert delta_cs_diversion(sv, psv, AB, MNL1, 1.0) == 0.0

    def test_large_sigma_ces_matches_mnl_functional_form(self):
        psv_q, sv_q = single_product_config(0.3, 0.2, basis=QUANTITY)
        psv_r, sv_r = single_product_config(0.3, 0.2, basis=REVENUE)
        big_sigma = DemandParams(DemandKind.CES, 1e9, 1.0)
        mnl_value = delta_cs_diversion(sv_q, psv_q, AB, MNL1, 1.0)
        ces_value = delta_cs_diversion(sv_r, psv_r, AB, big_sigma, 1.0)
        assert ces_value == pytest.approx(mnl_value, rel=1e-7)

    @pytest.mark.parametrize("kind", [DemandKind.MNL, DemandKind.CES])
    def test_exact_identity_random_multiproduct(self, kind):
        rng = np.random.default_rng(13)
        basis = QUANTITY if kind is DemandKind.MNL else REVENUE
        for _ in range(300):
            product_shares, ownership, firm_shares = random_share_config(rng)
            psv = ProductShareVector(product_shares, ownership)
            sv = ShareVector.from_firm_shares(firm_shares, basis)
            params = random_params(rng, kind)
            merger = MergerSpec("f0", "f1")
            report = delta_cs_prop1(psv, sv, merger, params, 1.0)
            assert abs(report.dcs_corollary - report.dcs_prop1) < 1e-12
            direct = delta_cs_diversion(sv, psv, merger, params, 1.0)
            assert abs(direct - report.dcs_prop1) < 1e-12

    @given(
        st.floats(0.001, 0.45),
        st.floats(0.001, 0.45),
        st.floats(1.2, 8.0),
    )
    @settings(max_examples=200)
    def test_identity_holds_for_arbitrary_ces_shares(self, sa, sb, sigma):
        params = DemandParams(DemandKind.CES, sigma, 1.0)
        psv, sv = single_product_config(sa, sb, basis=REVENUE)
        report = delta_cs_prop1(psv, sv, AB, params, 1.0)
        assert abs(report.dcs_corollary - report.dcs_prop1) < 1e-12


def passthrough_oracle(psv, sv, merger, params, kappa, n):
    """Direct route: dCS = -N sum_j s_j dp_j with dp = kappa UPP."""
    pressures = upp(psv, sv, merger, params)
    ordered = list(kappa.products)
    col = {pid: i for i, pid in enumerate(ordered)}
    total = 0.0
    for j in ordered:
        dp_j = sum(kappa.kappa[col[j]][col[i]] * pressures[i] for i in ordered)
        total += psv.product_shares[j] * dp_j
    return -n * total


class TestPassThrough:
    def setup_method(self):
        self.psv = ProductShareVector(
            {"a1": 0.12, "a2": 0.08, "b1": 0.15},
            {"a1": "a", "a2": "a", "b1": "b"},
        )
        self.sv = ShareVector.from_firm_shares({"a": 0.2, "b": 0.15}, QUANTITY)
        self.products = ("a1", "a2", "b1")

    def test_identity_kappa_reduces_to_prop1(self):
        params = DemandParams(DemandKind.MNL, 2.0, 3.0)
        report = delta_cs_prop1(self.psv, self.sv, AB, params, 1.5)
        value = delta_cs_passthrough(
            self.psv, self.sv, AB, params, PassThroughMatrix.identity(self.products), n=3.0
        )
        assert value == pytest.approx(report.dcs_prop1, abs=1e-12)

    def test_zero_kappa_gives_zero(self):
        kappa = PassThroughMatrix(tuple(tuple(0.0 for _ in range(3)) for _ in range(3)), self.products)
        assert delta_cs_passthrough(self.psv, self.sv, AB, MNL1, kappa) == 0.0

    def test_linear_in_kappa(self):
        ident = PassThroughMatrix.identity(self.products)
        half = PassThroughMatrix(
            tuple(tuple(0.5 * v for v in row) for row in ident.kappa), self.products
        )
        full = delta_cs_passthrough(self.psv, self.sv, AB, MNL1, ident)
        assert delta_cs_passthrough(self.psv, self.sv, AB, MNL1, half) == pytest.approx(
            0.5 * full, abs=1e-15
        )

    def test_matches_direct_price_effect_sum(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            product_shares, ownership, firm_shares = random_share_config(rng)
            psv = ProductShareVector(product_shares, ownership)
            sv = ShareVector.from_firm_shares(firm_shares, QUANTITY)
            params = random_params(rng, DemandKind.MNL)
            merger = MergerSpec("f0", "f1")
            prods = tuple(psv.products_of("f0") + psv.products_of("f1"))
            kappa = PassThroughMatrix(
                tuple(tuple(float(rng.uniform(0.0, 1.5)) for _ in prods) for _ in prods), prods
            )
            mine = delta_cs_passthrough(psv, sv, merger, params, kappa, n=params.scale)
            oracle = passthrough_oracle(psv, sv, merger, params, kappa, params.scale)
            assert mine == pytest.approx(oracle, rel=1e-10, abs=1e-12)

    def test_rejects_ces(self):
        psv, sv = single_product_config(0.3, 0.2, basis=REVENUE)
        with pytest.raises(ValueError):
            delta_cs_passthrough(psv, sv, AB, CES2, PassThroughMatrix.identity(("a", "b")))

    def test_rejects_mismatched_products(self):
        with pytest.raises(ValueError):
            delta_cs_passthrough(
                self.psv, self.sv, AB, MNL1, PassThroughMatrix.identity(("a1", "a2"))
            )


def rho1_grid_extrema(c0, delta0, points=10_000):
    """Grid-search extrema of rho1 over {s_a + s_b <= c0, 2 s_a s_b = delta0}."""
    s_min = 0.5 * (c0 - math.sqrt(c0 * c0 - 2.0 * delta0))
    s_sym = math.sqrt(delta0 / 2.0)
    sa = np.linspace(s_min, s_sym, points)
    sb = delta0 / (2.0 * sa)
    values = 1.0 / ((1.0 - sa) * (1.0 - sb))
    return float(values.min()), float(values.max())


class TestRho1Bounds:
    def test_known_case(self):
        bounds = rho1_bounds(0.9, 0.08)
        assert bounds.lower == pytest.approx(1.5625, abs=1e-12)
        assert bounds.upper == pytest.approx(7.142857142857143, abs=1e-12)
        assert bounds.argmin == (pytest.approx(0.2), pytest.approx(0.2))
        root = math.sqrt(0.81 - 0.16)
        assert bounds.argmax[0] == pytest.approx(0.5 * (0.9 - root))
        assert bounds.argmax[1] == pytest.approx(0.5 * (0.9 + root))

    def test_degenerate_feasible_set(self):
        c0 = 0.8
        bounds = rho1_bounds(c0, c0 * c0 / 2.0)
        assert bounds.lower == pytest.approx(bounds.upper, rel=1e-12)

    def test_small_delta_limit(self):
        bounds = rho1_bounds(0.9, 1e-12)
        assert bounds.lower == pytest.approx(1.0, abs=1e-5)

    def test_infeasible_rejected(self):
        with pytest.raises(ValueError):
            rho1_bounds(0.2, 0.08)

    def test_matches_grid_search(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            c0 = float(rng.uniform(0.3, 0.95))
            delta0 = float(rng.uniform(0.2, 0.95)) * c0 * c0 / 2.0
            bounds = rho1_bounds(c0, delta0)
            lo, hi = rho1_grid_extrema(c0, delta0)
            assert bounds.lower == pytest.approx(lo, rel=1e-4)
            assert bounds.upper == pytest.approx(hi, rel=1e-4)


class TestLimitAgreement:
    def test_mnl_ratio_to_benchmark_approaches_one(self):
        psv, sv = single_product_config(1e-4, 1e-4)
        report = delta_cs_prop1(psv, sv, AB, MNL1, 1.0)
        assert report.dcs_prop1 / report.dcs_ns == pytest.approx(1.0, abs=1e-3)

    def test_ces_ratio_after_sigma_correction(self):
        psv, sv = single_product_config(1e-4, 1e-4, basis=REVENUE)
        sigma = CES2.price_response
        report = delta_cs_prop1(psv, sv, AB, CES2, 1.0)
        corrected = report.dcs_ns * (sigma - 1.0) / sigma
        assert report.dcs_prop1 / corrected == pytest.approx(1.0, abs=1e-3)
