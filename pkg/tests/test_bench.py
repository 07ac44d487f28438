import math

import numpy as np
import pytest

from heston_xpand import bench
from heston_xpand.model import DomainError


def test_figure_presets():
    assert len(bench.FIGURE_STRIKES) == 25
    assert bench.FIGURE_STRIKES[0] == 70.0 and bench.FIGURE_STRIKES[-1] == 130.0
    p = bench.figure_params(4)
    assert (p.rho, p.nu, p.kappa, p.theta, p.v0, p.r, p.s0) == (-0.8, 0.5, 1.5, 0.2, 0.25, 0.001, 100.0)
    with pytest.raises(DomainError):
        bench.figure_params(7)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        (dict(strikes=()), "strikes"),
        (dict(strikes=(100.0, 90.0)), "strikes"),
        (dict(maturities=(0.0,)), "maturities"),
        (dict(methods=("o9",)), "methods"),
    ],
)
def test_sweep_spec_validation(kwargs, field):
    base = dict(strikes=(90.0, 100.0), maturities=(1.0,), params=bench.figure_params(1), methods=("o2",))
    with pytest.raises(DomainError) as info:
        bench.SweepSpec(**{**base, **kwargs})
    assert info.value.field == field


def test_log10_rel_err_floor():
    assert bench.log10_rel_err(1.0, 1.0) == pytest.approx(math.log10(bench.EPS))
    assert bench.log10_rel_err(1.01, 1.0) == pytest.approx(-2.0)


def test_sweep_rows_and_roundtrip(tmp_path):
    spec = bench.SweepSpec.figure(1)
    report = bench.run_sweep(spec)
    assert len(report.cells) == 25 * 4 * 3
    assert report.error_grid("o4").shape == (4, 25)
    path = report.write_csv(tmp_path / "fig1.csv")
    rows = bench.read_sweep_csv(path)
    assert len(rows) == len(report.cells)
    for row, cell in zip(rows, report.cells):
        assert row["price"] == cell.price
        assert row["log10_rel_err"] == cell.log10_rel_err


def test_sweep_failed_method_marks_cells():
    # zc on a correlated model cannot be priced; the other methods still run
    spec = bench.SweepSpec((90.0, 100.0), (1.0,), bench.figure_params(1), ("o2", "zc"))
    report = bench.run_sweep(spec)
    failed = report.failures
    assert len(failed) == 2 and all(c.method == "zc" and "RhoNotZero" in c.failure for c in failed)
    assert np.all(np.isnan(report.error_grid("zc")))
    assert np.all(np.isfinite(report.error_grid("o2")))


def test_sweep_threads_identical():
    spec = bench.SweepSpec.figure(3)
    a = bench.run_sweep(spec, threads=1)
    b = bench.run_sweep(spec, threads=3)
    assert [c.price for c in a.cells] == [c.price for c in b.cells]


def test_sweep_with_ref_method_is_exact():
    spec = bench.SweepSpec((100.0,), (1.0,), bench.figure_params(2), ("ref", "o2"))
    cells = bench.run_sweep(spec).cells
    assert cells[0].method == "ref" and cells[0].log10_rel_err == pytest.approx(math.log10(bench.EPS))


def test_timing_task():
    t = bench.TimingTask.from_number(2)
    assert t.task_id == "t2_1000" and t.n_param_sets == 1000
    with pytest.raises(DomainError):
        bench.TimingTask.from_number(4)
    with pytest.raises(DomainError):
        bench.TimingTask("t1_100", batch_size=50)
    assert [bench.TASK_SIZES[bench.TASK_IDS[i]] for i in (1, 2, 3)] == [100, 1000, 10_000]


def test_timing_batch_layout():
    strikes, taus = bench.timing_batch()
    assert strikes.size == taus.size == 100
    assert strikes.min() == pytest.approx(80.0) and strikes.max() == pytest.approx(120.0)
    assert taus.min() == pytest.approx(1 / 12) and taus.max() == 5.0
    assert np.all(np.diff(taus) >= 0)


def test_sampled_params_in_box():
    for p in bench.sample_params(500, 3):
        assert 0.5 <= p.kappa <= 3 and 0.05 <= p.theta <= 0.5 and -0.9 <= p.rho <= 0
        assert 0.05 <= p.nu <= 0.95 * math.sqrt(2 * p.kappa * p.theta)
        assert p.feller_ratio >= 1.0


def test_params_hash_deterministic():
    a = bench.params_hash(bench.sample_params(100, 0))
    assert a == bench.params_hash(bench.sample_params(100, 0))
    assert a != bench.params_hash(bench.sample_params(100, 1))
    assert len(a) == 16


def test_run_timing_roundtrip(tmp_path):
    table = bench.run_timing(bench.TimingTask.from_number(1), ("ref", "o2"), repeats=1)
    assert [r.method for r in table.rows] == ["ref", "o2"]
    assert table.rows[0].speedup == pytest.approx(1.0)
    assert table.rows[1].speedup > 1.0
    rows = bench.read_timing_csv(table.write_csv(tmp_path / "t.csv"))
    assert rows == table.rows


@pytest.mark.slow
def test_task_times_grow_with_size():
    times = [bench.run_timing(bench.TimingTask.from_number(n), ("o2",), repeats=1).seconds("o2") for n in (1, 2, 3)]
    assert times[0] <= times[1] <= times[2]
