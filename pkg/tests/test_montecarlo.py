import pytest

from mergerscreen import DemandKind, McConfig, McRecord, ShareVector
from mergerscreen.demand import QUANTITY, REVENUE
from mergerscreen.montecarlo import (
    emit_figure_data,
    figure_csv,
    figure_points,
    figure_svg,
    records_to_csv,
    run,
    simulate_merger,
    summarize,
)

MNL_CFG = McConfig(demand=DemandKind.MNL, reps=50, seed=11)


class TestConfig:
    def test_rejects_bad_margin_range(self):
        with pytest.raises(ValueError):
            McConfig(demand=DemandKind.MNL, margin_lo=0.6, margin_hi=0.3)

    def test_rejects_single_firm(self):
        with pytest.raises(ValueError):
            McConfig(demand=DemandKind.MNL, n_firms=1)

    def test_rejects_wrong_alpha_length(self):
        with pytest.raises(ValueError):
            McConfig(demand=DemandKind.MNL, n_firms=6, dirichlet_alpha=(1.0, 1.0))

    def test_rejects_zero_reps(self):
        with pytest.raises(ValueError):
            McConfig(demand=DemandKind.MNL, reps=0)


class TestDeterminism:
    def test_single_replicate_reproducible(self):
        cfg = McConfig(demand=DemandKind.MNL, reps=1, seed=5)
        first = run(cfg)
        second = run(cfg)
        assert first == second

    def test_csv_bytes_stable_across_runs(self):
        csv1 = records_to_csv(run(MNL_CFG), MNL_CFG)
        csv2 = records_to_csv(run(MNL_CFG), MNL_CFG)
        assert csv1 == csv2

    def test_workers_do_not_change_output(self):
        cfg = McConfig(demand=DemandKind.MNL, reps=24, seed=3)
        serial = run(cfg, workers=1)
        parallel = run(cfg, workers=2)
        assert serial == parallel
        assert records_to_csv(serial, cfg) == records_to_csv(parallel, cfg)

    def test_records_ordered_by_replicate(self):
        records = run(MNL_CFG)
        assert [r.replicate for r in records] == list(range(MNL_CFG.reps))


class TestSimulateMerger:
    def test_degenerate_partner_share_gives_negligible_effects(self):
        shares = ShareVector.from_firm_shares(
            {"1": 0.3, "2": 1e-9, "3": 0.2, "4": 0.1, "5": 0.05, "6": 0.05}, QUANTITY
        )
        result = simulate_merger(shares, 0.45, DemandKind.MNL)
        assert abs(result["dcs_actual"]) < 1e-8
        assert abs(result["dcs_prop1"]) < 1e-8
        assert abs(result["dcs_ns"]) < 1e-8
        assert abs(result["dp"]["1"]) < 1e-8

    @pytest.mark.parametrize(
        "kind,basis", [(DemandKind.MNL, QUANTITY), (DemandKind.CES, REVENUE)]
    )
    def test_harm_is_negative_for_real_mergers(self, kind, basis):
        shares = ShareVector.from_firm_shares({"1": 0.25, "2": 0.2, "3": 0.15}, basis)
        result = simulate_merger(shares, 0.5, kind)
        assert result["dcs_actual"] < 0
        assert result["dcs_prop1"] < 0
        assert result["dp"]["1"] > 0
        assert result["dp"]["2"] > 0


class TestRun:
    def test_mnl_run_quality(self):
        cfg = McConfig(demand=DemandKind.MNL, reps=300, seed=2)
        records = run(cfg)
        converged = [r for r in records if r.converged]
        assert len(converged) == 300
        assert all(r.dcs_actual <= 0 for r in converged)
        summary = summarize(records)
        mean_dp = sum(abs(v) for r in converged for v in r.dp.values()) / (2 * len(converged))
        assert summary.mae_upp < 0.15 * mean_dp

    def test_ces_double_scale_fits_better(self):
        cfg = McConfig(demand=DemandKind.CES, reps=300, seed=2)
        records = run(cfg)
        plain = summarize(records, upp_scale=1.0)
        doubled = summarize(records, upp_scale=2.0)
        assert plain.median_ratio_dp_over_upp > 1.0
        assert doubled.mae_upp < plain.mae_upp


def make_record(replicate, dcs_actual, dcs_prop1, dcs_ns, upp=0.1, dp=0.1, converged=True):
    fields = {}
    if converged:
        fields = dict(
            price_response=2.0,
            upp={"1": upp, "2": upp},
            dp={"1": dp, "2": dp},
            dcs_actual=dcs_actual,
            dcs_prop1=dcs_prop1,
            dcs_ns=dcs_ns,
        )
    return McRecord(
        replicate=replicate,
        shares=(0.2, 0.2, 0.1, 0.1, 0.1, 0.1),
        outside_share=0.2,
        margin=0.4,
        converged=converged,
        **fields,
    )


class TestSummarize:
    def test_perfect_approximations_have_zero_error(self):
        records = [make_record(i, -0.05, -0.05, -0.05) for i in range(4)]
        summary = summarize(records)
        assert summary.mae_prop1 == 0.0
        assert summary.mae_ns == 0.0
        assert summary.bias_prop1 == 0.0

    def test_single_record_mae_is_absolute_error(self):
        summary = summarize([make_record(0, -0.05, -0.03, -0.01)])
        assert summary.mae_prop1 == pytest.approx(0.02)
        assert summary.mae_ns == pytest.approx(0.04)
        assert summary.bias_prop1 == pytest.approx(0.02)

    def test_zero_converged_is_an_error(self):
        with pytest.raises(ValueError):
            summarize([make_record(0, 0, 0, 0, converged=False)])

    def test_high_discard_rate_warns(self):
        records = [make_record(0, -0.05, -0.05, -0.05)] + [
            make_record(i + 1, 0, 0, 0, converged=False) for i in range(3)
        ]
        with pytest.warns(RuntimeWarning):
            summary = summarize(records)
        assert summary.n_discarded == 3
        assert summary.discard_rate == pytest.approx(0.75)

    def test_ratio_uses_unscaled_pressure(self):
        summary = summarize([make_record(0, -0.05, -0.05, -0.05, upp=0.1, dp=0.15)], upp_scale=2.0)
        assert summary.median_ratio_dp_over_upp == pytest.approx(1.5)
        assert summary.mae_upp == pytest.approx(0.05)  # |0.15 - 2 * 0.1|


class TestFigures:
    def test_points_per_figure(self):
        records = [make_record(0, -0.05, -0.04, -0.03)]
        assert len(figure_points(records, "upp_scatter")) == 2
        assert figure_points(records, "cs_scatter_prop1") == [(-0.04, -0.05)]
        assert figure_points(records, "cs_scatter_ns") == [(-0.03, -0.05)]

    def test_unknown_figure_rejected(self):
        with pytest.raises(ValueError):
            figure_points([], "volcano_plot")

    def test_empty_selection_is_header_only(self):
        assert figure_csv([], "upp_scatter") == "predicted,actual\n"

    def test_csv_deterministic(self):
        records = run(McConfig(demand=DemandKind.MNL, reps=10, seed=9))
        assert figure_csv(records, "cs_scatter_ns") == figure_csv(records, "cs_scatter_ns")

    def test_svg_well_formed(self):
        records = [make_record(0, -0.05, -0.04, -0.03)]
        svg = figure_svg(records, "cs_scatter_prop1")
        assert svg.startswith("<svg")
        assert svg.rstrip().endswith("</svg>")
        assert svg.count("<circle") == 1

    def test_emit_writes_files(self, tmp_path):
        records = run(McConfig(demand=DemandKind.MNL, reps=5, seed=1))
        csv_path = tmp_path / "scatter.csv"
        svg_path = tmp_path / "scatter.svg"
        emit_figure_data(records, "upp_scatter", csv_path, svg_path=svg_path)
        assert csv_path.read_text().startswith("predicted,actual")
        assert "<svg" in svg_path.read_text()

    def test_upp_scale_moves_predictions(self):
        records = [make_record(0, -0.05, -0.04, -0.03, upp=0.1)]
        ones = figure_points(records, "upp_scatter", upp_scale=1.0)
        twos = figure_points(records, "upp_scatter", upp_scale=2.0)
        assert twos[0][0] == pytest.approx(2.0 * ones[0][0])


class TestRecordsCsv:
    def test_header_and_row_shape(self):
        records = run(McConfig(demand=DemandKind.MNL, reps=3, seed=0))
        text = records_to_csv(records, McConfig(demand=DemandKind.MNL, reps=3, seed=0))
        lines = text.strip().split("\n")
        header = lines[0].split(",")
        assert header[:2] == ["replicate", "converged"]
        assert "dcs_actual" in header
        assert len(lines) == 4
        assert all(len(line.split(",")) == len(header) for line in lines[1:])

    def test_failed_replicates_leave_result_cells_empty(self):
        cfg = McConfig(demand=DemandKind.MNL, reps=1, seed=0)
        record = make_record(0, 0, 0, 0, converged=False)
        line = records_to_csv([record], cfg).strip().split("\n")[1]
        cells = line.split(",")
        assert cells[1] == "0"
        assert cells[-1] == "" and cells[-2] == "" and cells[-3] == ""
