import numpy as np
import pytest

from cyclecast import ingest
from cyclecast.months import format_ym, parse_ym

from conftest import DATA_DIR, write_csv


class TestLoadSeriesCsv:
    def test_parses_two_rows(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", ["1959-01-01,4.87", "1959-02-01,4.89"])
        series = ingest.load_series_csv(path, "BAA")
        assert len(series) == 2
        assert series.start == parse_ym("1959-01")
        np.testing.assert_allclose(series.values, [4.87, 4.89])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ingest.MissingFileError):
            ingest.load_series_csv(str(tmp_path / "absent.csv"), "BAA")

    def test_gap_detected(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", ["1959-01-01,1.0", "1959-03-01,2.0"])
        with pytest.raises(ingest.GapInSeriesError) as err:
            ingest.load_series_csv(path, "BAA")
        assert err.value.month == parse_ym("1959-02")

    def test_fred_missing_marker_is_malformed(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", ["1959-01-01,1.0", "1959-02-01,.", "1959-03-01,2.0"])
        with pytest.raises(ingest.MalformedRowError) as err:
            ingest.load_series_csv(path, "BAA")
        assert err.value.line_no == 3

    def test_bad_header(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", ["1959-01-01,1.0"], header="date;value")
        with pytest.raises(ingest.MalformedRowError):
            ingest.load_series_csv(path, "BAA")

    def test_non_month_start_date(self, tmp_path):
        path = write_csv(tmp_path / "s.csv", ["1959-01-15,1.0"])
        with pytest.raises(ingest.MalformedRowError):
            ingest.load_series_csv(path, "BAA")


class TestFetchSeriesFred:
    def _fake_http(self, payload, status=200):
        def http_get(url, params):
            assert "series_id" in params and params["file_type"] == "json"
            return status, payload

        return http_get

    def test_matches_committed_fixture(self, tmp_path):
        fixture = ingest.load_series_csv(f"{DATA_DIR}/UNRATE.csv", "UNRATE")
        observations = [
            {"date": f"{format_ym(int(m))}-01", "value": str(v)}
            for m, v in zip(fixture.months[:3], fixture.values[:3])
        ]
        series = ingest.fetch_series_fred(
            "UNRATE",
            "key",
            parse_ym("1959-01"),
            parse_ym("1959-03"),
            cache_dir=str(tmp_path / "cache"),
            http_get=self._fake_http({"observations": observations}),
        )
        assert len(series) == 3
        np.testing.assert_allclose(series.values, fixture.values[:3])
        assert (tmp_path / "cache" / "UNRATE.json").exists()

    def test_bad_api_key(self):
        with pytest.raises(ingest.AuthError):
            ingest.fetch_series_fred(
                "UNRATE", "bad", parse_ym("1959-01"), parse_ym("1959-03"),
                cache_dir="", http_get=self._fake_http({"error": "bad key"}, status=400),
            )

    def test_end_before_start(self):
        with pytest.raises(ingest.EmptyResponseError):
            ingest.fetch_series_fred(
                "UNRATE", "key", parse_ym("1959-03"), parse_ym("1959-01"),
                cache_dir="", http_get=self._fake_http({"observations": []}),
            )

    def test_http_error_status(self):
        with pytest.raises(ingest.HttpError):
            ingest.fetch_series_fred(
                "UNRATE", "key", parse_ym("1959-01"), parse_ym("1959-03"),
                cache_dir="", http_get=self._fake_http({}, status=500),
            )


class TestTermSpread:
    def test_equal_rates_zero(self):
        months = np.array([parse_ym("2000-01")])
        gs10 = ingest.MonthlySeries("GS10", "Percent", months, np.array([4.0]))
        tb3 = ingest.MonthlySeries("TB3MS", "Percent", months, np.array([4.0]))
        spread = ingest.compute_term_spread(gs10, tb3)
        assert spread.name == "T10Y3M"
        np.testing.assert_allclose(spread.values, [0.0])

    def test_subtraction_with_inversion(self):
        months = np.array([parse_ym("2000-01"), parse_ym("2000-02")])
        gs10 = ingest.MonthlySeries("GS10", "Percent", months, np.array([3.0, 3.1]))
        tb3 = ingest.MonthlySeries("TB3MS", "Percent", months, np.array([1.0, 3.3]))
        spread = ingest.compute_term_spread(gs10, tb3)
        np.testing.assert_allclose(spread.values, [2.0, -0.2])

    def test_matches_published_spread_fixture(self):
        gs10 = ingest.load_series_csv(f"{DATA_DIR}/GS10.csv", "GS10")
        tb3 = ingest.load_series_csv(f"{DATA_DIR}/TB3MS.csv", "TB3MS")
        published = ingest.load_series_csv(f"{DATA_DIR}/T10Y3M.csv", "T10Y3M")
        spread = ingest.compute_term_spread(gs10, tb3)
        pos = parse_ym("2019-05") - spread.start
        assert abs(spread.values[pos] - published.values[pos]) < 0.01

    def test_misaligned(self):
        gs10 = ingest.MonthlySeries("GS10", "Percent", np.array([0, 1]), np.array([1.0, 2.0]))
        tb3 = ingest.MonthlySeries("TB3MS", "Percent", np.array([1, 2]), np.array([1.0, 2.0]))
        with pytest.raises(ingest.MisalignedSeriesError):
            ingest.compute_term_spread(gs10, tb3)


class TestBuildPanel:
    def test_canonical_counts(self, canonical_panel):
        assert len(canonical_panel) == 738
        assert int(canonical_panel.labels.sum()) == 98

    def test_paper_span_labels(self, canonical_panel):
        by_month = dict(zip(canonical_panel.months, canonical_panel.labels))
        assert by_month[parse_ym("1960-04")] == 1
        assert by_month[parse_ym("1961-02")] == 0

    def test_thirteen_series_rejected(self, canonical_panel):
        series = [
            ingest.MonthlySeries(name, "", canonical_panel.months, canonical_panel.columns[name])
            for name in list(ingest.SERIES_NAMES)[:-1]
        ]
        with pytest.raises(ingest.SeriesMissingError):
            ingest.build_panel(series, ingest.default_us_recessions())

    def test_test_split_has_23_recessions(self, canonical_panel):
        assert int(canonical_panel.labels[-198:].sum()) == 23

    def test_deterministic(self, canonical_panel):
        again = ingest.load_panel_dir(DATA_DIR)
        assert np.array_equal(again.months, canonical_panel.months)
        assert np.array_equal(again.labels, canonical_panel.labels)
        for name in ingest.SERIES_NAMES:
            assert np.array_equal(again.columns[name], canonical_panel.columns[name])

    def test_span_lengths_match_calendar(self, canonical_panel):
        # every span contributes its full length except the final one,
        # truncated at the 2020-06 data end
        calendar = ingest.default_us_recessions()
        months = canonical_panel.months
        for start, end in calendar.spans:
            inside = int(((months >= start) & (months < end)).sum())
            expected = min(end, int(months[-1]) + 1) - start
            assert int(canonical_panel.labels[(months >= start) & (months < end)].sum()) == inside == expected

    def test_coverage_gap(self, canonical_panel):
        short = [
            ingest.MonthlySeries(
                name,
                "",
                canonical_panel.months[12:],
                canonical_panel.columns[name][12:],
            )
            for name in ingest.SERIES_NAMES
        ]
        with pytest.raises(ingest.CoverageGapError):
            ingest.build_panel(short, ingest.default_us_recessions())
