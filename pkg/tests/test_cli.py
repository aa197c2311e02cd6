import csv
import json

import numpy as np
import pytest

from dpbo.cli import (
    ConfigError,
    DataError,
    config_from_dict,
    main,
    parse_config,
    read_csv_dataset,
)
from dpbo.synthetic import make_classification

MINIMAL_NOISY = {"mode": "noisy", "sigma2": 0.5}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def write_dataset(path, n, d=3, seed=0):
    rng = np.random.default_rng(seed)
    X, y = make_classification(n, d, rng)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(d)] + ["label"])
        for xi, yi in zip(X, y):
            writer.writerow([*(float(v) for v in xi), int(yi)])
    return path


class TestParseConfig:
    def test_minimal_noisy_gets_defaults(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, MINIMAL_NOISY))
        assert cfg.epsilon == 1.0
        assert cfg.delta == 0.1
        assert cfg.T == 10
        assert cfg.kernel_family == "se"

    def test_lipschitz_missing_fields_all_reported(self, tmp_path):
        path = write_config(tmp_path, {"mode": "lipschitz"})
        with pytest.raises(ConfigError) as excinfo:
            parse_config(path)
        message = str(excinfo.value)
        assert "lipschitz mode requires lambda_min" in message
        assert "lipschitz mode requires train_csv" in message
        assert "lipschitz mode requires g_star" in message

    def test_round_trip_through_defaults_expansion(self, tmp_path):
        cfg = parse_config(
            write_config(
                tmp_path,
                {
                    "mode": "noisy",
                    "sigma2": 0.7,
                    "k1": 0.9,
                    "grid": {"points": [[0.0], [0.5], [1.0]]},
                    "kernel": {"family": "matern52", "lengthscale": 0.4},
                },
            )
        )
        again = config_from_dict(cfg.to_dict())
        assert again == cfg

    def test_unknown_keys_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown config keys"):
            parse_config(write_config(tmp_path, {"mode": "noisy", "sigma2": 1.0, "sigma": 2}))

    def test_bad_mode(self, tmp_path):
        with pytest.raises(ConfigError, match="mode must be one of"):
            parse_config(write_config(tmp_path, {"mode": "banana"}))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{mode:")
        with pytest.raises(ConfigError, match="valid JSON"):
            parse_config(path)

    def test_noisy_requires_positive_sigma2(self, tmp_path):
        with pytest.raises(ConfigError, match="noisy mode requires sigma2 > 0"):
            parse_config(write_config(tmp_path, {"mode": "noisy"}))


class TestReadCsvDataset:
    def test_happy_path(self, tmp_path):
        path = write_dataset(tmp_path / "d.csv", 12)
        ds = read_csv_dataset(path)
        assert ds.size == 12 and ds.dim == 3

    def test_label_column_required(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="'label'"):
            read_csv_dataset(path)

    def test_ragged_row_reported_with_number(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,label\n1.0,1\n2.0\n")
        with pytest.raises(DataError, match="row 3"):
            read_csv_dataset(path)

    def test_non_numeric_reported_with_number(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,label\nfoo,1\n")
        with pytest.raises(DataError, match="row 2"):
            read_csv_dataset(path)

    def test_bad_label_value(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,label\n0.5,2\n")
        with pytest.raises(DataError, match="label must be -1 or 1"):
            read_csv_dataset(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("")
        with pytest.raises(DataError, match="header"):
            read_csv_dataset(path)


class TestRunCommand:
    def noisy_config(self, tmp_path, **extra):
        payload = {
            "mode": "noisy",
            "sigma2": 0.5,
            "k1": 0.9,
            "T": 6,
            "seed": 3,
            "grid": {"sobol": {"count": 12, "low": [0.0, 0.0], "high": [1.0, 1.0]}},
            **extra,
        }
        return write_config(tmp_path, payload)

    def test_result_schema(self, tmp_path, capsys):
        assert main(["run", "--config", str(self.noisy_config(tmp_path))]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["schema_version"] == 1
        result = payload["result"]
        for key in ("lambda_tilde", "lambda_tilde_index", "v_tilde", "constants",
                    "utility_bounds", "budget_spent"):
            assert key in result
        assert result["budget_spent"]["total"]["epsilon"] == 2.0

    def test_byte_identical_reruns(self, tmp_path):
        cfg = self.noisy_config(tmp_path)
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_flag_overrides_config(self, tmp_path, capsys):
        cfg = self.noisy_config(tmp_path)
        assert main(["run", "--config", str(cfg), "--eps", "2.5"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["config"]["epsilon"] == 2.5
        assert payload["result"]["constants"]["epsilon"] == 2.5

    def test_env_seed_fallback(self, tmp_path, capsys, monkeypatch):
        payload = {k: v for k, v in MINIMAL_NOISY.items()}
        cfg = write_config(tmp_path, payload)
        monkeypatch.setenv("DPBO_SEED", "99")
        assert main(["run", "--config", str(cfg)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["config"]["seed"] == 99

    def test_repeat_fans_out_seeds(self, tmp_path, capsys):
        cfg = self.noisy_config(tmp_path, repeat=3)
        assert main(["run", "--config", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["seeds"] == [3, 4, 5]
        assert len(payload["runs"]) == 3

    def test_config_error_exit_code_and_stderr_json(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"mode": "noisy"})
        assert main(["run", "--config", str(cfg)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "ConfigError"

    def test_exact_mode(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {
                "mode": "exact",
                "A": 1.0,
                "tau": 2.0,
                "T": 4,
                "seed": 0,
                "grid": {"sobol": {"count": 10, "low": [0.0], "high": [1.0]}},
            },
        )
        assert main(["run", "--config", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "f_tilde" in payload["result"]

    def test_lipschitz_mode(self, tmp_path, capsys):
        train = write_dataset(tmp_path / "train.csv", 30, seed=1)
        val = write_dataset(tmp_path / "val.csv", 15, seed=2)
        cfg = write_config(
            tmp_path,
            {
                "mode": "lipschitz",
                "T": 3,
                "seed": 4,
                "L": 1.0,
                "g_star": 1.0,
                "lambda_min": 0.1,
                "lambda_max": 1.0,
                "train_csv": str(train),
                "val_csv": str(val),
            },
        )
        assert main(["run", "--config", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "f_tilde_L" in payload["result"]
        assert payload["result"]["budget_spent"]["total"]["delta"] == 0.0


class TestOtherCommands:
    def test_mtgp_writes_curve(self, tmp_path):
        cfg = write_config(
            tmp_path,
            {
                "mode": "mtgp-likelihood",
                "seed": 7,
                "mtgp": {
                    "pairs": 10,
                    "settings": 12,
                    "true_k1": 0.8,
                    "curve_csv": str(tmp_path / "curve.csv"),
                },
            },
        )
        out = tmp_path / "result.json"
        assert main(["mtgp", "--config", str(cfg), "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        curve_csv = payload["result"]["curve_csv"]
        with open(curve_csv) as fh:
            assert fh.readline().strip() == "k1,loglik"
        assert abs(payload["result"]["argmax_k1"] - 0.8) <= 0.15

    def test_bounds_without_running(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path,
            {
                "mode": "noisy",
                "sigma2": 1.0,
                "k1": 0.95,
                "T": 10,
                "grid": {"sobol": {"count": 20, "low": [0.0], "high": [1.0]}},
            },
        )
        assert main(["bounds", "--config", str(cfg)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "selected_mean_vs_optimum" in payload["bounds"]
        assert payload["constants"]["C1"] == pytest.approx(11.541560327111707)

    def test_mode_without_config(self, capsys):
        assert main(["run", "--mode", "noisy", "--sigma2", "0.5", "--seed", "1"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["result"]["mode"] == "noisy"
