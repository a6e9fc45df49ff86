import math

import pytest

from spinmple.bench import (
    BenchConfig,
    BenchRow,
    er_probability,
    fit_slope,
    read_csv,
    run_consistency,
    scaled_error_ratio,
    write_csv,
)
from spinmple.exceptions import InsufficientData


def synthetic(err):
    return [BenchRow(n, r, err2=err(n)) for n in (64, 128, 256, 512) for r in range(10)]


def test_fit_slope_exact_power_law():
    fit = fit_slope(synthetic(lambda n: n**-0.5))
    assert fit.slope == pytest.approx(-0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-10)
    assert scaled_error_ratio(fit.medians) == pytest.approx(1.0, rel=1e-12)


def test_fit_slope_constant():
    assert fit_slope(synthetic(lambda n: 0.3)).slope == pytest.approx(0.0, abs=1e-12)


def test_fit_slope_insufficient():
    rows = synthetic(lambda n: 1.0)[:25]
    with pytest.raises(InsufficientData):
        fit_slope(rows)
    failed = [BenchRow(r.n, r.replicate, status="no_witness") for r in synthetic(lambda n: 1.0)]
    with pytest.raises(InsufficientData):
        fit_slope(failed)


def test_config_validation():
    with pytest.raises(ValueError):
        BenchConfig(replicates=0)
    with pytest.raises(ValueError):
        BenchConfig(n_grid=(64, 64))
    with pytest.raises(ValueError):
        BenchConfig(n_grid=(16, 64))
    with pytest.raises(ValueError):
        BenchConfig(beta0=-0.1)
    with pytest.raises(ValueError):
        BenchConfig(graph="lattice")


def test_er_probability_rule():
    assert er_probability(1024) == pytest.approx(10 * math.log(1024) / 1024)
    assert er_probability(10**6) == 0.05


@pytest.fixture(scope="module")
def small_cfg():
    return BenchConfig(graph="er", n_grid=(32, 48, 64), replicates=10, burnin=100, seed=5)


def test_run_consistency_deterministic_and_thread_independent(small_cfg):
    a = run_consistency(small_cfg, threads=1)
    b = run_consistency(small_cfg, threads=3)
    assert len(a) == 30
    assert [r.key() for r in a] == small_cfg.cells()
    assert [r.values() for r in a] == [r.values() for r in b]
    assert all(r.err2 >= 0 for r in a if r.ok)


def test_csv_round_trip_and_resume(tmp_path, small_cfg):
    rows = run_consistency(small_cfg, threads=1)
    path = tmp_path / "b.csv"
    write_csv(rows, path)
    header = path.read_text().splitlines()[0]
    assert header == "n,replicate,beta_hat,h_hat,err2,t_tilde,j_norm,exists,iters,wall_ms,status"
    back = read_csv(path)
    assert [r.values() for r in back] == [r.values() for r in rows]
    calls = []
    resumed = run_consistency(small_cfg, threads=1, completed=back[:20], progress=calls.append)
    assert len(calls) == 10
    assert [r.values() for r in resumed] == [r.values() for r in rows]


def test_failures_are_recorded(monkeypatch, small_cfg):
    import spinmple.bench as bm

    def boom(*a, **k):
        raise RuntimeError("sampler exploded")

    monkeypatch.setattr(bm, "sample_gibbs", boom)
    rows = bm.run_consistency(small_cfg, threads=1)
    assert len(rows) == 30
    assert all(r.status == "error:RuntimeError" and math.isnan(r.err2) for r in rows)
