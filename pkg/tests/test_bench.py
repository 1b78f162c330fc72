import pytest

from coreforge.bench import (
    PUBLISHED_FITS,
    PUBLISHED_REDUCTIONS,
    ExperimentConfig,
    MeasurementTable,
    mean_reduction,
    published_table,
    report,
    run_experiment,
    size_ordering_holds,
)
from coreforge.efficiency import MIB
from coreforge.errors import ConfigError
from coreforge.factorization import Variant


def small(doc, **kw):
    return ExperimentConfig(doc, points=kw.pop("points", 3), step=kw.pop("step", 30), **kw)


def test_config_validation(doc):
    with pytest.raises(ConfigError):
        ExperimentConfig(doc, points=1)
    with pytest.raises(ConfigError):
        ExperimentConfig(doc, step=0)
    with pytest.raises(ValueError):
        ExperimentConfig(doc, regime="sometimes")


def test_run_is_deterministic(doc, tmp_path):
    a = run_experiment(small(doc, csv_path=tmp_path / "a.csv"))
    b = run_experiment(small(doc, csv_path=tmp_path / "b.csv"))
    assert a.to_csv() == b.to_csv()
    assert (tmp_path / "a.csv").read_text() == a.to_csv()
    assert a.quantities() == [0, 90, 180]


def test_randomized_seeded(doc):
    a = run_experiment(small(doc, regime="randomized", seed=4))
    b = run_experiment(small(doc, regime="randomized", seed=4))
    assert a.to_csv() == b.to_csv()


def test_csv_round_trip(doc):
    table = run_experiment(small(doc))
    again = MeasurementTable.from_csv(table.to_csv())
    assert again.to_csv() == table.to_csv()


def test_partial_results_on_failure(doc, tmp_path, monkeypatch):
    from coreforge import store

    calls = {"n": 0}
    original = store.StoreHandle.insert_objects

    def flaky(self, objects):
        calls["n"] += 1
        if calls["n"] > 3:
            raise OSError("disk full")
        return original(self, objects)

    monkeypatch.setattr(store.StoreHandle, "insert_objects", flaky)
    path = tmp_path / "partial.csv"
    with pytest.raises(OSError):
        run_experiment(small(doc, csv_path=path))
    text = path.read_text()
    assert text.strip().endswith("# FAILED: OSError: disk full")
    table = MeasurementTable.from_csv(text)
    assert table.quantities() == [0, 90]


def test_validate_rejects_gaps():
    table = MeasurementTable()
    table.add(0, "hc", 1, 1)
    table.add(0, "scic", 1, 1)
    with pytest.raises(ValueError):
        table.validate()


def test_mean_reduction_skips_zero():
    table = MeasurementTable()
    for q, hc, mcic in [(0, 10, 100), (10, 100, 50), (20, 200, 50)]:
        table.add(q, "hc", hc, hc)
        table.add(q, "scic", hc, hc)
        table.add(q, "mcic", mcic, mcic)
    assert mean_reduction(table, "live", "hc") == pytest.approx(62.5)


def test_report_orders_slopes(doc):
    summary = report(run_experiment(small(doc, points=4, step=100)))
    assert summary.slope_ordering == {"live": True, "export": True}
    assert "slope ordering" in summary.render()


class TestPublished:
    def test_reductions_replay(self):
        summary = report(published_table())
        for (measure, base), expected in PUBLISHED_REDUCTIONS.items():
            assert abs(summary.reductions[(measure, base)] - expected) <= 2.0

    def test_fits_in_mb(self):
        summary = report(published_table())
        for key, (slope, intercept) in PUBLISHED_FITS.items():
            fit = summary.fits[key]
            assert fit.r_squared > 0.9
            if key != (Variant.SCIC, "export"):
                assert abs(fit.slope - slope) <= 0.2 * abs(slope)

    def test_units(self):
        mb, b = published_table(), published_table(MIB)
        assert b.at(12000, "hc").live_bytes == pytest.approx(mb.at(12000, "hc").live_bytes * MIB)

    def test_ordering(self):
        table = published_table()
        assert all(size_ordering_holds(table, q)["export"] for q in table.quantities() if q > 0)
