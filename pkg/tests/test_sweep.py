import math

import pytest

from roiseal.sweep import (
    CSV_HEADER,
    SweepReport,
    SweepRow,
    contiguity_warnings,
    render_figures,
    run_sweep,
    survival_threshold,
    write_csv,
)


def rows_from(plane, quality_survival):
    return [
        SweepRow(plane=plane, quality=q, survived=s, compression_pct=90.0, psnr_db=40.0)
        for q, s in quality_survival
    ]


class TestThreshold:
    def test_simple_boundary(self):
        qs = [40, 50, 60, 70]
        assert survival_threshold(qs, [False, False, True, True]) == 60

    def test_all_survive(self):
        assert survival_threshold([10, 20, 30], [True, True, True]) == 10

    def test_none_survive(self):
        assert survival_threshold([10, 20, 30], [False, False, False]) is None

    def test_top_failure_means_no_threshold(self):
        assert survival_threshold([10, 20, 30], [True, True, False]) is None

    def test_hole_moves_threshold_up(self):
        qs = [40, 50, 60, 70, 80]
        assert survival_threshold(qs, [False, True, False, True, True]) == 70


class TestWarnings:
    def test_monotone_run_is_quiet(self):
        rows = rows_from(1, [(40, False), (50, False), (60, True), (70, True)])
        assert contiguity_warnings(rows) == []

    def test_stray_survival_warns(self):
        rows = rows_from(1, [(40, True), (50, False), (60, True), (70, True)])
        warnings = contiguity_warnings(rows)
        assert len(warnings) == 1
        assert "plane 1" in warnings[0] and "40" in warnings[0]

    def test_warnings_are_per_plane(self):
        rows = rows_from(1, [(40, True), (50, False), (60, True)]) + rows_from(
            2, [(40, False), (50, True), (60, True)]
        )
        warnings = contiguity_warnings(rows)
        assert len(warnings) == 1 and "plane 1" in warnings[0]


@pytest.fixture(scope="module")
def report(phantom320, roi320, params320):
    return run_sweep(
        phantom320, roi320, params320, planes=[1, 2], qualities=[20, 60, 90]
    )


class TestRunSweep:

    def test_row_count(self, report):
        assert len(report.rows) == 2 * 3

    def test_rows_are_ordered(self, report):
        assert [(r.plane, r.quality) for r in report.rows] == [
            (1, 20), (1, 60), (1, 90), (2, 20), (2, 60), (2, 90),
        ]

    def test_row_value_ranges(self, report):
        for row in report.rows:
            assert 0.0 < row.compression_pct < 100.0
            assert row.psnr_db > 0.0

    def test_quality_sixty_survives_on_plane_one(self, report):
        # amplitude-1 blocks decode unambiguously at quality 60 (step 13)
        assert all(r.survived for r in report.rows if r.quality == 60 and r.plane == 1)

    def test_quality_sixty_loses_plane_two(self, report):
        # amplitude-2 blocks land exactly on the decode threshold at step 13
        assert not any(r.survived for r in report.rows if r.quality == 60 and r.plane == 2)

    def test_high_quality_survives(self, report):
        assert all(r.survived for r in report.rows if r.quality == 90)

    def test_thresholds_recorded_per_plane(self, report):
        assert set(report.thresholds) == {1, 2}


class TestReportOutput:
    def make_report(self):
        rows = rows_from(1, [(40, False), (60, True), (80, True)])
        return SweepReport(rows=rows, thresholds={1: 60}, warnings=[])

    def test_csv_schema(self, tmp_path):
        path = tmp_path / "sweep.csv"
        write_csv(self.make_report(), path)
        lines = path.read_text().strip().splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        assert any("psnr_db" in c for c in comments)
        body = [ln for ln in lines if not ln.startswith("#")]
        assert body[0] == CSV_HEADER
        assert body[1] == "1,40,false,90.0000,40.0000"
        assert len(body) == 1 + 3

    def test_csv_infinite_psnr(self, tmp_path):
        rows = [SweepRow(1, 100, True, 50.0, math.inf)]
        path = tmp_path / "sweep.csv"
        write_csv(SweepReport(rows=rows, thresholds={1: 100}, warnings=[]), path)
        assert path.read_text().strip().splitlines()[-1].endswith(",inf")

    def test_json_dict(self):
        doc = self.make_report().to_json_dict()
        assert doc == {"thresholds": {"1": 60}, "warnings": [], "rows": 3}

    def test_figures_rendered(self, tmp_path):
        written = render_figures(self.make_report(), tmp_path)
        assert [p.name for p in written] == [
            "survival_by_quality.png",
            "psnr_by_quality.png",
            "compression_by_quality.png",
        ]
        for p in written:
            assert p.exists() and p.stat().st_size > 0
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
