# tests/test_cli_io.py
# Parser/writer CSV, file kasus TOML, report JSON/CSV, run_command end-to-end.

import json
import math

import numpy as np
import pandas as pd
import pytest

from cli.cli_commands import parse_range
from cli.cli_core import EXIT_OK, EXIT_VALIDATION, run_command
from cli.cli_io import (
    load_case_bundle,
    parse_frequencies,
    parse_peaks,
    parse_profiles,
    write_frequencies,
    write_peaks,
    write_profiles,
)
from core.errors import ValidationError
from core.report_store import Report, format_number, load_report, save_report
from inference.inference_case import TraceData
from inference.inference_model import total_log_likelihood
from mixture.mixture_ladder import AlleleLadder
from tests.conftest import D2_PARAMETERS, write_d2_case

TOL = 1e-10


def write_csv(path, header, rows):
    lines = [header] + rows
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def assert_line(exc_info, line):
    assert exc_info.value.line == line, str(exc_info.value)


@pytest.fixture
def ladders():
    return {
        "D8": AlleleLadder.from_pairs("D8", ["10", "11", "12.1"], [0.25, 0.35, 0.4]),
        "TH01": AlleleLadder.from_pairs("TH01", ["6", "9.3"], [0.3, 0.7]),
    }


# ═══════════════════════════════════════════════════════════════════
# FREKUENSI
# ═══════════════════════════════════════════════════════════════════


class TestFrequencies:
    def test_write_then_parse_exact(self, tmp_path, ladders):
        path = write_frequencies(ladders, tmp_path / "frequencies.csv")
        parsed = parse_frequencies(path)
        assert list(parsed) == ["D8", "TH01"]
        for m, ladder in ladders.items():
            assert parsed[m].labels == ladder.labels
            np.testing.assert_array_equal(parsed[m].frequencies, ladder.frequencies)

    def test_sorted_by_allele_value(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", ["M,10,0.5", "M,9.3,0.2", "M,9,0.3"])
        assert parse_frequencies(path)["M"].labels == ("9", "9.3", "10")

    def test_duplicate_allele_line(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", ["M,16,0.5", "M,16.0,0.5"])
        with pytest.raises(ValidationError) as e:
            parse_frequencies(path)
        assert_line(e, 3)

    def test_sum_far_from_one_rejected(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", ["M,1,0.5", "M,2,0.45"])
        with pytest.raises(ValidationError) as e:
            parse_frequencies(path)
        assert_line(e, 2)

    @pytest.mark.parametrize(
        "values",
        [
            ["0.5", "0.499999"],
            ["0.25", "0.25", "0.25", "0.249999"],
        ],
    )
    def test_sum_at_tolerance_renormalized(self, tmp_path, values):
        # jumlah desimal 0.999999, tepat di batas toleransi
        rows = [f"M,{i + 1},{v}" for i, v in enumerate(values)]
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", rows)
        q = parse_frequencies(path)["M"].frequencies
        assert math.fsum(q) == pytest.approx(1.0, abs=1e-15)
        assert q[0] / q[-1] == pytest.approx(float(values[0]) / float(values[-1]), rel=1e-12)

    def test_sum_just_outside_tolerance_rejected(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", ["M,1,0.5", "M,2,0.4999989"])
        with pytest.raises(ValidationError):
            parse_frequencies(path)

    def test_zero_frequency_rejected(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", ["M,1,1.0", "M,2,0"])
        with pytest.raises(ValidationError) as e:
            parse_frequencies(path)
        assert_line(e, 3)

    def test_non_numeric_allele(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele,frequency", ["M,X,1.0"])
        with pytest.raises(ValidationError) as e:
            parse_frequencies(path)
        assert_line(e, 2)

    def test_missing_column_is_header_line(self, tmp_path):
        path = write_csv(tmp_path / "f.csv", "marker,allele", ["M,1"])
        with pytest.raises(ValidationError) as e:
            parse_frequencies(path)
        assert_line(e, 1)
        assert "frequency" in str(e.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            parse_frequencies(tmp_path / "nothing.csv")


# ═══════════════════════════════════════════════════════════════════
# PUNCAK & PROFIL
# ═══════════════════════════════════════════════════════════════════


class TestPeaks:
    def test_write_then_parse(self, tmp_path, ladders):
        traces = {
            "T1": TraceData("T1", 50.0, {"D8": np.array([0.0, 120.5, 77.0]), "TH01": np.array([310.25, 0.0])}),
        }
        path = write_peaks(traces, ladders, tmp_path / "peaks.csv")
        parsed = parse_peaks(path, ladders, {"T1": 50.0})
        for m in ladders:
            np.testing.assert_array_equal(parsed["T1"].heights[m], traces["T1"].heights[m])

    def test_unlisted_alleles_unobserved(self, tmp_path, ladders):
        path = write_csv(tmp_path / "p.csv", "trace,marker,allele,height", [])
        parsed = parse_peaks(path, ladders, {"T1": 50.0, "T2": 30.0})
        assert set(parsed) == {"T1", "T2"}
        assert parsed["T2"].threshold == 30.0
        for m, ladder in ladders.items():
            np.testing.assert_array_equal(parsed["T1"].heights[m], np.zeros(ladder.size))

    def test_height_below_threshold(self, tmp_path, ladders):
        path = write_csv(tmp_path / "p.csv", "trace,marker,allele,height", ["T1,D8,10,80", "T1,D8,11,20"])
        with pytest.raises(ValidationError) as e:
            parse_peaks(path, ladders, {"T1": 50.0})
        assert_line(e, 3)

    def test_allele_not_in_ladder(self, tmp_path, ladders):
        path = write_csv(tmp_path / "p.csv", "trace,marker,allele,height", ["T1,TH01,8,80"])
        with pytest.raises(ValidationError) as e:
            parse_peaks(path, ladders, {"T1": 50.0})
        assert_line(e, 2)

    def test_unknown_trace(self, tmp_path, ladders):
        path = write_csv(tmp_path / "p.csv", "trace,marker,allele,height", ["T9,D8,10,80"])
        with pytest.raises(ValidationError):
            parse_peaks(path, ladders, {"T1": 50.0})


class TestProfiles:
    def test_write_then_parse(self, tmp_path, ladders):
        profiles = {"K1": {"D8": np.array([1, 0, 1]), "TH01": np.array([0, 2])}}
        path = write_profiles(profiles, ladders, tmp_path / "profiles.csv")
        parsed = parse_profiles(path, ladders)
        np.testing.assert_array_equal(parsed["K1"]["D8"], [1, 0, 1])
        np.testing.assert_array_equal(parsed["K1"]["TH01"], [0, 2])

    def test_total_must_be_two(self, tmp_path, ladders):
        path = write_csv(
            tmp_path / "g.csv", "individual,marker,allele,count", ["K1,TH01,6,2", "K1,D8,10,1"]
        )
        with pytest.raises(ValidationError) as e:
            parse_profiles(path, ladders)
        assert_line(e, 3)

    def test_invalid_count(self, tmp_path, ladders):
        path = write_csv(tmp_path / "g.csv", "individual,marker,allele,count", ["K1,TH01,6,3"])
        with pytest.raises(ValidationError) as e:
            parse_profiles(path, ladders)
        assert_line(e, 2)


# ═══════════════════════════════════════════════════════════════════
# FILE KASUS
# ═══════════════════════════════════════════════════════════════════


class TestCaseBundle:
    def test_loads_d2_case(self, d2_case_file):
        bundle = load_case_bundle(d2_case_file)
        assert bundle.case.markers == ("D2S1338",)
        assert set(bundle.hypotheses) == {"Hp", "Hd"}
        assert bundle.hypotheses["Hd"].unknowns == ("U1",)
        assert bundle.engine.threads == 1
        assert bundle.optimizer.restarts == 1
        assert bundle.parameters["Hd"]["MC15"].fraction("U1") == 0.5
        assert bundle.output_dir == d2_case_file.parent / "reports"

    def test_unknown_settings_key(self, tmp_path):
        path = write_d2_case(tmp_path)
        text = path.read_text(encoding="utf-8").replace("[engine]\n", "[engine]\nbogus = 1\n")
        path.write_text(text, encoding="utf-8")
        with pytest.raises(ValidationError):
            load_case_bundle(path)

    def test_parameters_for_unknown_hypothesis(self, tmp_path):
        path = write_d2_case(tmp_path, parameters="[parameters.Hx.MC15]\nrho = 1.0\nxi = 0.1\neta = 1.0\n")
        with pytest.raises(ValidationError):
            load_case_bundle(path)

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "case.toml"
        path.write_text("[data\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            load_case_bundle(path)

    def test_unknown_hypothesis_name(self, d2_case_file):
        with pytest.raises(ValidationError):
            load_case_bundle(d2_case_file).hypothesis("H9")


# ═══════════════════════════════════════════════════════════════════
# REPORT
# ═══════════════════════════════════════════════════════════════════


class TestReportStore:
    def test_format_number(self):
        assert format_number(math.nan) == "nan"
        assert format_number(math.inf) == "inf"
        assert format_number(-math.inf) == "-inf"
        assert format_number(1.0 / 3.0) == 0.333333333333

    def test_save_and_load(self, tmp_path):
        report = Report(command="loglik", seed=7, results={"x": np.float64(2.5), "n": np.int64(3)})
        report.tables["markers"] = pd.DataFrame({"marker": ["M"], "value": [0.1]})
        path = save_report(report, tmp_path)
        assert path == tmp_path / "loglik.json"
        data = load_report(path)
        assert data["results"] == {"x": 2.5, "n": 3}
        assert data["tables"] == ["markers"]
        assert (tmp_path / "loglik_markers.csv").exists()

    def test_load_missing_is_empty(self, tmp_path):
        assert load_report(tmp_path / "none.json") == {}


class TestParseRange:
    @pytest.mark.parametrize(
        "text,expected", [("3", [3]), ("1:4", [1, 2, 3, 4]), ("2,4,8", [2, 4, 8])]
    )
    def test_forms(self, text, expected):
        assert parse_range(text, "A") == expected

    @pytest.mark.parametrize("text", ["a:b", "", "5:1"])
    def test_invalid(self, text):
        with pytest.raises(ValidationError):
            parse_range(text, "A")


# ═══════════════════════════════════════════════════════════════════
# RUN_COMMAND
# ═══════════════════════════════════════════════════════════════════


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


class TestRunCommand:
    def test_treesize(self, tmp_path):
        code = run_command(["treesize", "--method", "slice", "--A", "2", "--k", "1", "--N", "1", "--out", str(tmp_path)])
        assert code == EXIT_OK
        assert read_json(tmp_path / "treesize.json")["results"]["total_size"] == 117
        table = pd.read_csv(tmp_path / "treesize_sizes.csv")
        assert table["total_size"].tolist() == [117]

    def test_treesize_grid_counted(self, tmp_path):
        code = run_command(["treesize", "--method", "triangle", "--A", "2:4", "--k", "1,2", "--count", "--out", str(tmp_path)])
        assert code == EXIT_OK
        table = pd.read_csv(tmp_path / "treesize_sizes.csv")
        assert len(table) == 6
        assert (table["counted_size"] == table["total_size"]).all()

    def test_bad_argument_exit_code(self, tmp_path):
        assert run_command(["treesize", "--method", "bogus"]) == EXIT_VALIDATION

    def test_missing_case_file(self, tmp_path):
        assert run_command(["loglik", str(tmp_path / "none.toml")]) == EXIT_VALIDATION

    def test_invalid_peak_height_exit_code(self, tmp_path):
        path = write_d2_case(tmp_path, parameters=D2_PARAMETERS)
        peaks = tmp_path / "peaks.csv"
        peaks.write_text(peaks.read_text(encoding="utf-8").replace("64", "34"), encoding="utf-8")
        assert run_command(["loglik", str(path)]) == EXIT_VALIDATION

    def test_loglik_without_fixed_parameters(self, tmp_path):
        path = write_d2_case(tmp_path)
        assert run_command(["loglik", str(path)]) == EXIT_VALIDATION

    def test_loglik_matches_model(self, d2_case_file):
        out = d2_case_file.parent / "reports"
        assert run_command(["loglik", str(d2_case_file), "--hypothesis", "Hd"]) == EXIT_OK
        data = read_json(out / "loglik.json")

        bundle = load_case_bundle(d2_case_file)
        expected = total_log_likelihood(bundle.case, bundle.parameters["Hd"], bundle.hypotheses["Hd"])
        assert data["results"]["hypothesis"] == "Hd"
        assert data["results"]["log_likelihood"] == pytest.approx(expected, rel=TOL)
        assert data["results"]["log10_likelihood"] == pytest.approx(expected / math.log(10), rel=TOL)
        assert set(data["inputs"]) == {"case", "frequencies", "peaks", "profiles"}

        table = pd.read_csv(out / "loglik_markers.csv")
        assert table["marker"].tolist() == ["D2S1338"]
        assert table["log_likelihood"].iloc[0] == pytest.approx(expected, rel=TOL)

    @pytest.mark.parametrize("method", ["slice", "triangle", "optimal"])
    def test_loglik_tree_method_invariant(self, d2_case_file, tmp_path, method):
        out = tmp_path / method
        assert run_command(["loglik", str(d2_case_file), "--hypothesis", "Hd", "--method", method, "--out", str(out)]) == EXIT_OK
        bundle = load_case_bundle(d2_case_file)
        expected = total_log_likelihood(bundle.case, bundle.parameters["Hd"], bundle.hypotheses["Hd"])
        assert read_json(out / "loglik.json")["results"]["log_likelihood"] == pytest.approx(expected, rel=TOL)

    def test_lr_same_hypothesis_is_zero(self, d2_case_file, tmp_path):
        code = run_command(["lr", str(d2_case_file), "--fixed", "--hp", "Hp", "--hd", "Hp", "--out", str(tmp_path)])
        assert code == EXIT_OK
        assert read_json(tmp_path / "lr.json")["results"]["log10_lr"] == 0.0

    def test_lr_fixed_matches_difference(self, d2_case_file, tmp_path):
        assert run_command(["lr", str(d2_case_file), "--fixed", "--out", str(tmp_path)]) == EXIT_OK
        results = read_json(tmp_path / "lr.json")["results"]
        bundle = load_case_bundle(d2_case_file)
        lp = total_log_likelihood(bundle.case, bundle.parameters["Hp"], bundle.hypotheses["Hp"])
        ld = total_log_likelihood(bundle.case, bundle.parameters["Hd"], bundle.hypotheses["Hd"])
        assert results["log10_lr"] == pytest.approx((lp - ld) / math.log(10), rel=1e-9)

    def test_deconvolve_reports(self, d2_case_file, tmp_path):
        assert run_command(["deconvolve", str(d2_case_file), "--seed", "3", "--out", str(tmp_path)]) == EXIT_OK
        data = read_json(tmp_path / "deconvolve.json")
        assert "ranking_D2S1338" in data["tables"]

        ranking = pd.read_csv(tmp_path / "deconvolve_ranking_D2S1338.csv", dtype={"U1": str})
        probs = ranking["probability"].to_numpy()
        assert np.all(np.diff(probs) <= 1e-12)
        assert probs.sum() <= 1.0 + 1e-9
        assert "23" in ranking["U1"].iloc[0].split("/")
        assert data["results"]["markers"]["D2S1338"]["covered_mass"] == pytest.approx(probs.sum(), abs=1e-9)

        presence = pd.read_csv(tmp_path / "deconvolve_presence.csv", dtype={"allele": str})
        assert ((presence["probability"] >= 0) & (presence["probability"] <= 1 + 1e-12)).all()

    def test_presence_lr_reuses_fixed_parameters(self, d2_case_file, tmp_path):
        assert run_command(["presence-lr", str(d2_case_file), "--out", str(tmp_path / "p")]) == EXIT_OK
        assert run_command(["lr", str(d2_case_file), "--fixed", "--out", str(tmp_path / "l")]) == EXIT_OK
        presence = read_json(tmp_path / "p" / "presence-lr.json")["results"]
        full = read_json(tmp_path / "l" / "lr.json")["results"]
        assert presence["fits"] == {}
        assert presence["log10_lr_heights"] == pytest.approx(full["log10_lr"], rel=1e-9)
        assert math.isfinite(presence["log10_lr_presence"])

    def test_deconvolve_joint(self, d2_case_file, tmp_path):
        assert run_command(["deconvolve", str(d2_case_file), "--joint", "--seed", "5", "--out", str(tmp_path)]) == EXIT_OK
        data = read_json(tmp_path / "deconvolve.json")
        assert data["tables"] == ["joint"]
        joint = pd.read_csv(tmp_path / "deconvolve_joint.csv", dtype={"D2S1338:U1": str})
        assert joint["probability"].sum() == pytest.approx(data["results"]["covered_mass"], abs=1e-9)

    def test_deconvolve_dropout_column(self, d2_case_file, tmp_path):
        assert run_command(["deconvolve", str(d2_case_file), "--dropout-column", "--out", str(tmp_path)]) == EXIT_OK
        assert read_json(tmp_path / "deconvolve.json")["results"]["dropout_column"] == "D"

    @pytest.mark.parametrize("kind,table", [("qq", "points"), ("intervals", "intervals"), ("preq", "monitor")])
    def test_diagnose_reports(self, d2_case_file, tmp_path, kind, table):
        code = run_command(["diagnose", kind, str(d2_case_file), "--hypothesis", "Hd", "--out", str(tmp_path)])
        assert code == EXIT_OK
        data = read_json(tmp_path / f"diagnose_{kind}.json")
        assert data["tables"] == [table]

    def test_diagnose_qq_u_in_unit_interval(self, d2_case_file, tmp_path):
        run_command(["diagnose", "qq", str(d2_case_file), "--hypothesis", "Hd", "--out", str(tmp_path)])
        points = pd.read_csv(tmp_path / "diagnose_qq_points.csv")
        assert len(points) == 4
        assert ((points["u"] >= 0) & (points["u"] <= 1)).all()

    def test_simulate_writes_peak_files(self, d2_case_file, tmp_path):
        code = run_command(["simulate", str(d2_case_file), "--hypothesis", "Hd", "--replicates", "2", "--seed", "11", "--out", str(tmp_path)])
        assert code == EXIT_OK
        assert read_json(tmp_path / "simulate.json")["results"]["files"] == ["simulate_peaks_1.csv", "simulate_peaks_2.csv"]
        bundle = load_case_bundle(d2_case_file)
        ladders = bundle.case.ladders
        parsed = parse_peaks(tmp_path / "simulate_peaks_1.csv", ladders, {"MC15": 50.0})
        z = parsed["MC15"].heights["D2S1338"]
        assert np.all((z == 0) | (z >= 50.0))

    def test_mle_fits_both_hypotheses(self, tmp_path):
        path = write_d2_case(tmp_path)
        assert run_command(["mle", str(path), "--seed", "2", "--out", str(tmp_path / "out")]) == EXIT_OK
        data = read_json(tmp_path / "out" / "mle.json")
        assert set(data["results"]) == {"Hp", "Hd"}
        assert data["results"]["Hd"]["log_likelihood"] > -math.inf
