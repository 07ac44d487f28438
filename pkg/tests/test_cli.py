import json
import math
import subprocess
import sys

import pytest

from heston_xpand import bench, cli
from heston_xpand.model import dump_params


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "p.json"
    dump_params(bench.figure_params(1), path)
    return path


@pytest.fixture
def zero_rho_file(tmp_path):
    path = tmp_path / "p0.json"
    dump_params(bench.figure_params(5), path)
    return path


@pytest.mark.parametrize("method,expected", [("ref", 18.806338), ("o2", 18.806335), ("o4", 18.806337)])
def test_price(params_file, capsys, method, expected):
    code = cli.main(["price", "--params", str(params_file), "--strike", "100", "--maturity", "1", "--method", method])
    assert code == cli.EXIT_OK
    name, price, indicator, elapsed = capsys.readouterr().out.strip().split(",")
    assert name == method and float(price) == pytest.approx(expected, abs=1e-6)
    assert (indicator == "") == (method == "ref")


def test_price_header_and_put(params_file, capsys):
    args = ["price", "--params", str(params_file), "--strike", "100", "--maturity", "1", "--method", "o3"]
    cli.main(args + ["--header"])
    header, call_line = capsys.readouterr().out.strip().splitlines()
    assert header == "method,price,error_indicator,elapsed_s"
    cli.main(args + ["--put"])
    put_line = capsys.readouterr().out.strip()
    call, put = float(call_line.split(",")[1]), float(put_line.split(",")[1])
    p = bench.figure_params(1)
    assert call - put == pytest.approx(100 - 100 * math.exp(-p.r), abs=1e-12)


def test_zero_corr_on_correlated_model(params_file, capsys):
    code = cli.main(["price", "--params", str(params_file), "--strike", "100", "--maturity", "1", "--method", "zc"])
    assert code == cli.EXIT_PRECONDITION
    assert "rho" in capsys.readouterr().err


def test_zero_corr_ok(zero_rho_file, capsys):
    assert cli.main(["price", "--params", str(zero_rho_file), "--strike", "90", "--maturity", "0.5",
                     "--method", "zc"]) == cli.EXIT_OK


def test_bad_params_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kappa": -1.0}))
    assert cli.main(["price", "--params", str(bad), "--strike", "100", "--maturity", "1",
                     "--method", "o2"]) == cli.EXIT_USAGE
    assert cli.main(["price", "--params", str(tmp_path / "missing.json"), "--strike", "100", "--maturity", "1",
                     "--method", "o2"]) == cli.EXIT_USAGE


def test_missing_required_flag():
    with pytest.raises(SystemExit) as info:
        cli.main(["check"])
    assert info.value.code == cli.EXIT_USAGE


def test_sweep_figure(tmp_path, capsys):
    assert cli.main(["sweep", "--figure", "2", "--output-dir", str(tmp_path)]) == cli.EXIT_OK
    rows = bench.read_sweep_csv(tmp_path / "fig2.csv")
    assert len(rows) == 25 * 4 * 3
    assert "o4: max log10 rel err" in capsys.readouterr().out


def test_sweep_custom_grid(tmp_path, params_file):
    code = cli.main(["sweep", "--params", str(params_file), "--strikes", "90,100,110", "--maturities", "0.5,2",
                     "--methods", "o2,o4", "--output-dir", str(tmp_path)])
    assert code == cli.EXIT_OK
    assert len(bench.read_sweep_csv(tmp_path / "sweep.csv")) == 3 * 2 * 2


def test_sweep_usage_errors(tmp_path, params_file):
    assert cli.main(["sweep", "--output-dir", str(tmp_path)]) == cli.EXIT_USAGE
    assert cli.main(["sweep", "--figure", "1", "--params", str(params_file)]) == cli.EXIT_USAGE
    assert cli.main(["sweep", "--params", str(params_file), "--strikes", "100,90", "--maturities", "1",
                     "--output-dir", str(tmp_path)]) == cli.EXIT_USAGE


def test_bench(tmp_path, capsys):
    code = cli.main(["bench", "--task", "1", "--repeats", "1", "--methods", "ref,o2", "--output-dir", str(tmp_path)])
    assert code == cli.EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[0] == f"params_hash={bench.params_hash(bench.sample_params(100, 0))}"
    assert out[1] == "task,method,seconds,speedup"
    assert len(bench.read_timing_csv(tmp_path / "bench_t1_100.csv")) == 2


def test_bench_rejects_zero_corr():
    assert cli.main(["bench", "--task", "1", "--methods", "o2,zc"]) == cli.EXIT_USAGE


def test_threads_resolution(monkeypatch):
    monkeypatch.delenv("HESTON_XPAND_THREADS", raising=False)
    assert cli.resolve_threads(None) == 1
    assert cli.resolve_threads(4) == 4
    monkeypatch.setenv("HESTON_XPAND_THREADS", "3")
    assert cli.resolve_threads(None) == 3
    assert cli.resolve_threads(2) == 2
    monkeypatch.setenv("HESTON_XPAND_THREADS", "0")
    with pytest.raises(cli.UsageError):
        cli.resolve_threads(None)
    monkeypatch.setenv("HESTON_XPAND_THREADS", "many")
    with pytest.raises(cli.UsageError):
        cli.resolve_threads(None)


def test_check_terms(capsys):
    assert cli.main(["check", "--suite", "terms"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_console_script_env_threads(tmp_path):
    env = {"HESTON_XPAND_THREADS": "0", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run([sys.executable, "-m", "heston_xpand.cli", "check", "--suite", "terms"],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == cli.EXIT_USAGE


def test_degenerate_model_o3_equals_ref(tmp_path, capsys):
    path = tmp_path / "flat.json"
    dump_params(bench.figure_params(2).replace(nu=1e-6), path)
    prices = {}
    for method in ("ref", "o3"):
        cli.main(["price", "--params", str(path), "--strike", "95", "--maturity", "2", "--method", method])
        prices[method] = float(capsys.readouterr().out.split(",")[1])
    assert prices["o3"] == pytest.approx(prices["ref"], rel=1e-6)
