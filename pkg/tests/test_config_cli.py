"""Tests for config validation, experiment runs, and the compdev CLI.

The contracts under test: every config violation is reported in one pass
with its key path, resolved configs survive a serialize/parse round trip,
table outputs are byte-identical across reruns of the same config, and the
CLI maps outcomes to exit codes (0 pass, 1 band failure, 2 config error).
"""

import copy
import json
import math

import numpy as np
import pytest

from compound_deviations import cli
from compound_deviations.config import (
    DEFAULTS,
    ResultTable,
    build_counting,
    build_models,
    build_summand,
    config_hash,
    format_cell,
    normalize_config,
    parse_config,
    serialize_config,
    table_metadata,
    versions_string,
)
from compound_deviations.counting import (
    BernoulliSumCounting,
    FractionalPoissonCounting,
    PoissonCounting,
    RenewalCounting,
)
from compound_deviations.errors import ConfigError
from compound_deviations.experiments import run_experiment
from compound_deviations.summands import (
    FiniteSupportSummands,
    GaussianSummands,
    GridFunctionSummands,
)


def ldp_raw():
    return {
        "summand": {
            "kind": "finite_support",
            "atoms": [1.0, -1.0],
            "probs": [0.5, 0.5],
        },
        "counting": {"kind": "poisson", "rate": 1.0},
        "experiment": {
            "kind": "ldp-check",
            "event": {"mode": "count", "level": 2.0},
            "ns": [50, 100, 200],
            "reps": 3000,
            "seed": 42,
        },
    }


def md_raw():
    return {
        "summand": {
            "kind": "finite_support",
            "atoms": [1.0],
            "probs": [1.0],
        },
        "counting": {"kind": "poisson", "rate": 1.0},
        "experiment": {
            "kind": "md-check",
            "scaling": {"gamma": 0.5},
            "etas": [1.0, -1.0],
            "ns": [100, 1000, 10000, 100000],
        },
    }


def write_json(path, data):
    path.write_text(json.dumps(data))
    return str(path)


class TestNormalizeConfig:
    def test_defaults_are_filled(self):
        config = normalize_config(ldp_raw())
        assert config["experiment"]["method"] == "tilted"
        assert config["experiment"]["band"] == 0.15
        assert config["output"] == {
            "directory": "out",
            "formats": ["csv", "json", "dat"],
        }
        # Scalar atoms are normalized to one-column rows.
        assert config["summand"]["atoms"] == [[1.0], [-1.0]]

    def test_every_violation_is_reported_once(self):
        bad = {
            "summand": {
                "kind": "finite_support",
                "atoms": [1.0],
                "probs": [0.7, 0.3],
                "extra": 1,
            },
            "counting": {"kind": "fractional_poisson", "nu": 1.5,
                         "rate": -2.0},
            "experiment": {
                "kind": "ldp-check",
                "event": {"mode": "count", "level": 2.0},
                "ns": [100, 50],
            },
            "nonsense": True,
        }
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(bad)
        errors = excinfo.value.errors
        expected_paths = [
            "summand: unknown key 'extra'",
            "summand.probs",
            "counting.nu",
            "counting.rate",
            "experiment.ns",
            "experiment.seed",
            "config: unknown key 'nonsense'",
        ]
        for needle in expected_paths:
            matching = [e for e in errors if needle in e]
            assert len(matching) == 1, (needle, errors)
        assert len(errors) == len(expected_paths)

    def test_domain_citations_in_messages(self):
        bad = copy.deepcopy(ldp_raw())
        bad["counting"] = {"kind": "fractional_poisson", "nu": 1.5,
                           "rate": 2.0}
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(bad)
        (nu_error,) = [e for e in excinfo.value.errors if "counting.nu" in e]
        assert "ν ∈ (0, 1]" in nu_error

        eval_bad = {
            "experiment": {"kind": "ml-eval", "nu": 0.2, "beta": 1.0,
                           "x_values": [1.0]},
        }
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(eval_bad)
        (nu_error,) = [e for e in excinfo.value.errors
                       if "experiment.nu" in e]
        assert "ν ∈ [0.3, 1] for direct evaluation" in nu_error

    def test_missing_seed_message_names_the_kind(self):
        raw = ldp_raw()
        del raw["experiment"]["seed"]
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(raw)
        (seed_error,) = excinfo.value.errors
        assert seed_error.startswith("experiment.seed: required: ldp-check")

    def test_models_optional_only_for_function_evaluation(self):
        eval_only = {
            "experiment": {"kind": "ml-eval", "nu": 0.5, "beta": 1.0,
                           "x_values": [0.5, 1.0]},
        }
        config = normalize_config(eval_only)
        assert "summand" not in config and "counting" not in config

        with pytest.raises(ConfigError) as excinfo:
            normalize_config({"experiment": ldp_raw()["experiment"]})
        joined = "\n".join(excinfo.value.errors)
        assert "summand: required key is missing" in joined
        assert "counting: required key is missing" in joined

    def test_md_mode_auto_resolution(self):
        exact = normalize_config(md_raw())
        assert exact["experiment"]["mode"] == "exact"

        renewal = md_raw()
        renewal["counting"] = {
            "kind": "renewal",
            "law": {"kind": "exponential", "rate": 1.0},
        }
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(renewal)
        (seed_error,) = excinfo.value.errors
        assert "experiment.seed" in seed_error

        renewal["experiment"]["seed"] = 7
        config = normalize_config(renewal)
        assert config["experiment"]["mode"] == "empirical"

    def test_scaling_needs_exactly_one_form(self):
        raw = md_raw()
        raw["experiment"]["scaling"] = {"gamma": 0.5, "table": [[10, 0.1]]}
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(raw)
        assert any("exactly one of 'gamma' or 'table'" in e
                   for e in excinfo.value.errors)

    def test_event_direction_rules(self):
        raw = ldp_raw()
        raw["experiment"]["event"] = {"mode": "sum", "level": 0.5}
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(raw)
        assert any("experiment.event.direction: required" in e
                   for e in excinfo.value.errors)

        raw["experiment"]["event"] = {"mode": "count", "level": 2.0,
                                      "direction": [1.0]}
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(raw)
        assert any("count events take no direction" in e
                   for e in excinfo.value.errors)

    def test_output_formats_are_checked_and_ordered(self):
        raw = ldp_raw()
        raw["output"] = {"formats": ["json", "csv"]}
        config = normalize_config(raw)
        assert config["output"]["formats"] == ["csv", "json"]

        raw["output"] = {"formats": ["yaml"]}
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(raw)
        assert any("output.formats" in e for e in excinfo.value.errors)

    def test_probability_sum_tolerance_message(self):
        raw = ldp_raw()
        raw["summand"]["probs"] = [0.5, 0.499]
        with pytest.raises(ConfigError) as excinfo:
            normalize_config(raw)
        (error,) = excinfo.value.errors
        assert "not 1 within 1e-12" in error

    def test_parse_config_reports_json_errors(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("{not json")
        assert "not valid JSON" in excinfo.value.errors[0]

    def test_non_object_rejected(self):
        with pytest.raises(ConfigError):
            normalize_config([1, 2, 3])


class TestSerializeRoundTrip:
    def test_parse_inverts_serialize(self):
        for raw in (ldp_raw(), md_raw()):
            config = normalize_config(raw)
            assert parse_config(serialize_config(config)) == config

    def test_hash_ignores_raw_key_order(self):
        raw = ldp_raw()
        shuffled = {key: raw[key] for key in
                    ("experiment", "counting", "summand")}
        assert config_hash(normalize_config(raw)) == config_hash(
            normalize_config(shuffled)
        )

    def test_hash_is_hex_and_value_sensitive(self):
        config = normalize_config(ldp_raw())
        digest = config_hash(config)
        assert len(digest) == 64 and set(digest) <= set("0123456789abcdef")
        changed = normalize_config(ldp_raw())
        changed["experiment"]["reps"] = 3001
        assert config_hash(changed) != digest


class TestBuildModels:
    def test_finite_support_and_poisson(self):
        mx, mn = build_models(normalize_config(ldp_raw()))
        assert isinstance(mx, FiniteSupportSummands)
        assert isinstance(mn, PoissonCounting)
        assert mx.dim == 1
        assert mn.derivs_at_zero().mean_rate == 1.0

    def test_gaussian_block(self):
        block = normalize_config({
            "summand": {"kind": "gaussian", "mean": [0.5, -1.0],
                        "cov": [[2.0, 0.5], [0.5, 1.0]]},
            "counting": {"kind": "poisson", "rate": 1.0},
            "experiment": {"kind": "rate-eval", "x_values": [[0.0, 0.0]],
                           "y_values": [1.0]},
        })["summand"]
        model = build_summand(block)
        assert isinstance(model, GaussianSummands)
        np.testing.assert_allclose(model.mean(), [0.5, -1.0])

    def test_grid_paths_block(self):
        block = normalize_config({
            "summand": {
                "kind": "grid_finite_support",
                "grid": [0.0, 1.0, 2.0],
                "paths": [[0.0, 1.0, 2.0], [0.0, 1.0, 4.0]],
                "probs": [0.5, 0.5],
            },
            "counting": {"kind": "poisson", "rate": 1.0},
            "experiment": {"kind": "rate-eval",
                           "x_values": [[0.0, 0.0, 0.0]],
                           "y_values": [1.0]},
        })["summand"]
        model = build_summand(block)
        assert isinstance(model, GridFunctionSummands)
        assert isinstance(model.base, FiniteSupportSummands)

    def test_counting_variants(self):
        fractional = build_counting({"kind": "fractional_poisson",
                                     "nu": 0.5, "rate": 1.0})
        assert isinstance(fractional, FractionalPoissonCounting)
        runs = build_counting({"kind": "bernoulli_sum", "preset": "runs",
                               "lam": 1.0, "c": 2.0})
        assert isinstance(runs, BernoulliSumCounting)
        renewal = build_counting({
            "kind": "renewal",
            "law": {"kind": "gamma", "shape": 2.0, "rate": 4.0},
        })
        assert isinstance(renewal, RenewalCounting)


class TestTableFormatting:
    def test_format_cell_by_type(self):
        assert format_cell("label") == "label"
        assert format_cell(True) == "true"
        assert format_cell(np.bool_(False)) == "false"
        assert format_cell(3) == "3"
        assert format_cell(np.int64(-4)) == "-4"
        assert format_cell(0.1) == "0.1"
        assert format_cell(np.float64(0.25)) == "0.25"
        assert format_cell(math.inf) == "inf"

    def test_result_table_layout(self):
        table = ResultTable(columns=["n", "value"],
                            metadata={"b": 2, "a": 1})
        table.add(10, 0.5)
        table.add(20, math.inf)
        text = table.csv_text()
        assert text == "# a=1\n# b=2\nn,value\n10,0.5\n20,inf\n"
        with pytest.raises(ValueError):
            table.add(30)

    def test_table_metadata_has_no_timestamp(self):
        config = normalize_config(ldp_raw())
        meta = table_metadata(config, seed=42)
        assert set(meta) == {"config_hash", "versions", "seed"}
        assert meta["config_hash"] == config_hash(config)

    def test_versions_string_shape(self):
        text = versions_string()
        keys = [part.split("=")[0] for part in text.split(",")]
        assert keys == ["python", "numpy", "scipy", "compound-deviations"]


class TestRunExperiment:
    def test_ldp_check_passes_and_reruns_identically(self, tmp_path):
        config = normalize_config(ldp_raw())
        dir_a, dir_b = tmp_path / "a", tmp_path / "b"
        code_a, summary_a = run_experiment(config, out_dir=str(dir_a))
        code_b, summary_b = run_experiment(config, out_dir=str(dir_b))
        assert code_a == code_b == 0
        assert summary_a["pass"] and summary_b["pass"]

        names = sorted(p.name for p in dir_a.iterdir())
        assert names == sorted(summary_a["outputs"])
        for name in names:
            if name.endswith("_summary.json"):
                with open(dir_a / name) as fh:
                    json_a = json.load(fh)
                with open(dir_b / name) as fh:
                    json_b = json.load(fh)
                # The run timestamp lives only in the summary; everything
                # else reruns equal.
                assert json_a.pop("timestamp") != ""
                assert json_b.pop("timestamp") != ""
                assert json_a == json_b
            else:
                assert (dir_a / name).read_bytes() == (
                    dir_b / name
                ).read_bytes()

    def test_rate_eval_table_values(self, tmp_path):
        config = normalize_config({
            "summand": ldp_raw()["summand"],
            "counting": ldp_raw()["counting"],
            "experiment": {"kind": "rate-eval", "x_values": [0.0],
                           "y_values": [2.0]},
        })
        code, summary = run_experiment(config, out_dir=str(tmp_path))
        assert code == 0
        assert summary["bands"] == []
        csv_name = [n for n in summary["outputs"] if n.endswith(".csv")][0]
        lines = (tmp_path / csv_name).read_text().splitlines()
        header = lines[-2].split(",")
        cells = dict(zip(header, lines[-1].split(",")))
        assert float(cells["rate_ld"]) == pytest.approx(
            2.0 * math.log(2.0) - 1.0, abs=1e-10
        )

    def test_md_check_exact_sweep_passes(self, tmp_path):
        config = normalize_config(md_raw())
        code, summary = run_experiment(config, out_dir=str(tmp_path))
        assert code == 0
        assert summary["details"]["mode"] == "exact"
        assert summary["details"]["a_decreases"]
        assert summary["details"]["na_increases"]
        dat_names = [n for n in summary["outputs"] if n.endswith(".dat")]
        assert dat_names
        first = (tmp_path / dat_names[0]).read_text()
        assert first.startswith("# eta=")

    def test_ml_eval_overflow_goes_to_inf(self, tmp_path):
        config = normalize_config({
            "experiment": {"kind": "ml-eval", "nu": 0.5, "beta": 1.0,
                           "x_values": [1.0, 40.0]},
        })
        code, summary = run_experiment(config, out_dir=str(tmp_path))
        assert code == 0
        csv_name = [n for n in summary["outputs"] if n.endswith(".csv")][0]
        text = (tmp_path / csv_name).read_text()
        last = text.splitlines()[-1].split(",")
        # log E(40) for this order is x^2 plus the log of the 1/nu
        # prefactor, far past float range for E itself.
        assert float(last[1]) == pytest.approx(1600.0 + math.log(2.0),
                                               rel=1e-6)
        assert last[2] == "inf"
        with open(tmp_path / "ml_eval_summary.json") as fh:
            data = json.load(fh)
        assert data["pass"] is True

    def test_writes_stay_inside_the_out_dir(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        config = normalize_config({
            "experiment": {"kind": "ml-eval", "nu": 0.5, "beta": 1.0,
                           "x_values": [1.0]},
        })
        run_experiment(config, out_dir="nested/out")
        assert [p.name for p in tmp_path.iterdir()] == ["nested"]

    def test_formats_limit_outputs(self, tmp_path):
        raw = ldp_raw()
        raw["output"] = {"formats": ["json"]}
        code, summary = run_experiment(normalize_config(raw),
                                       out_dir=str(tmp_path))
        names = [p.name for p in tmp_path.iterdir()]
        assert names == ["ldp_check_summary.json"]
        assert summary["outputs"] == ["ldp_check_summary.json"]


class TestCli:
    def test_defaults_prints_json(self, capsys):
        assert cli.main(["defaults"]) == 0
        out = capsys.readouterr().out
        assert json.loads(out) == DEFAULTS

    def test_missing_config_flag(self, capsys):
        assert cli.main(["ldp-check"]) == 2
        err = capsys.readouterr().err
        assert "error: config: --config is required" in err

    def test_config_errors_get_one_line_each(self, tmp_path, capsys):
        path = write_json(tmp_path / "bad.json", {
            "summand": {"kind": "finite_support", "atoms": [1.0],
                        "probs": [0.7, 0.3], "extra": 1},
            "counting": {"kind": "fractional_poisson", "nu": 1.5,
                         "rate": -2.0},
            "experiment": {"kind": "ldp-check",
                           "event": {"mode": "count", "level": 2.0},
                           "ns": [100, 50]},
            "nonsense": True,
        })
        assert cli.main(["ldp-check", "--config", path]) == 2
        err_lines = capsys.readouterr().err.strip().splitlines()
        assert len(err_lines) == 7
        assert all(line.startswith("error: ") for line in err_lines)

    def test_kind_mismatch_is_a_config_error(self, tmp_path, capsys):
        path = write_json(tmp_path / "ldp.json", ldp_raw())
        assert cli.main(["md-check", "--config", path]) == 2
        err = capsys.readouterr().err
        assert "declares 'ldp-check'" in err

    def test_ldp_check_run_reports_bands(self, tmp_path, capsys):
        path = write_json(tmp_path / "ldp.json", ldp_raw())
        code = cli.main(["ldp-check", "--config", path, "--out",
                         str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert code == 0
        assert "result: all bands passed" in out
        assert "pass: " in out
        wrote = [line for line in out.splitlines()
                 if line.startswith("wrote ")]
        assert any(line.endswith(".csv") for line in wrote)
        assert any(line.endswith("ldp_check_summary.json") for line in wrote)

    def test_seed_flag_satisfies_the_requirement(self, tmp_path, capsys):
        raw = ldp_raw()
        del raw["experiment"]["seed"]
        raw["experiment"]["ns"] = [40, 80]
        raw["experiment"]["reps"] = 1500
        path = write_json(tmp_path / "unseeded.json", raw)
        assert cli.main(["ldp-check", "--config", path]) == 2

        code = cli.main(["ldp-check", "--config", path, "--seed", "42",
                         "--out", str(tmp_path / "out")])
        capsys.readouterr()
        assert code in (0, 1)

    def test_ml_eval_direct_flags(self, tmp_path, capsys):
        code = cli.main(["ml-eval", "--nu", "0.5", "--beta", "1.0",
                         "--x", "1.0", "--x", "2.0",
                         "--out", str(tmp_path / "out")])
        out = capsys.readouterr().out
        assert code == 0
        assert "wrote ml_values.dat" in out

        assert cli.main(["ml-eval", "--nu", "0.5", "--x", "1.0",
                         "--out", str(tmp_path / "out2")]) == 2
        err = capsys.readouterr().err
        assert "missing: beta" in err

    def test_cli_reruns_are_byte_identical(self, tmp_path, capsys):
        args = ["ml-eval", "--nu", "0.7", "--beta", "1.0", "--x", "5.0"]
        assert cli.main(args + ["--out", str(tmp_path / "r1")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "r2")]) == 0
        capsys.readouterr()
        for name in ("ml_eval.csv", "ml_values.dat"):
            assert (tmp_path / "r1" / name).read_bytes() == (
                tmp_path / "r2" / name
            ).read_bytes()
