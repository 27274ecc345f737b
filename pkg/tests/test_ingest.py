import datetime as dt
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pigm.ingest import (CalendarConfig, IngestError, QuoteTick, TickParseError, build_daily_ensemble,
                         last_tick_grid, log_returns, parse_ticks, parse_timestamp, realized_correlation)

DAY1, DAY2 = dt.date(2021, 3, 1), dt.date(2021, 3, 2)


def mid(bid, ask):
    return (bid + ask) / 2


def corr(x, y):
    """Uncentred estimator over the intervals where both returns exist."""
    both = [(a, b) for a, b in zip(x, y) if a is not None and b is not None]
    num = sum(a * b for a, b in both)
    return num / math.sqrt(sum(a * a for a, _ in both) * sum(b * b for _, b in both))


def hand_returns():
    """Per-day 5-minute log returns of the small fixture, written out by hand (None = undefined)."""
    n = 287
    a1 = [math.log(mid(1.0095, 1.0105) / mid(0.9995, 1.0005)),
          math.log(mid(1.0195, 1.0205) / mid(1.0095, 1.0105)),
          math.log(mid(0.9995, 1.0005) / mid(1.0195, 1.0205))] + [0.0] * (n - 3)
    b1 = [0.0, math.log(mid(2.0990, 2.1010) / mid(1.9990, 2.0010)),
          math.log(mid(2.0490, 2.0510) / mid(2.0990, 2.1010))] + [0.0] * (n - 3)
    c1 = [None, None, math.log(mid(0.5199, 0.5201) / mid(0.4999, 0.5001)),
          math.log(mid(0.5099, 0.5101) / mid(0.5199, 0.5201))] + [0.0] * (n - 4)
    # day 2: 06:00 is grid point 72 and C's 06:02:30 tick is first seen at point 73; the late A and B
    # ticks are first seen at 23:55 (point 287) and C's 23:59:59 tick falls after the last point
    a2 = [0.0] * n
    a2[71] = math.log(mid(1.0100, 1.0110) / mid(1.0000, 1.0010))
    a2[286] = math.log(mid(1.0050, 1.0060) / mid(1.0100, 1.0110))
    b2 = [0.0] * n
    b2[71] = math.log(mid(1.9800, 1.9820) / mid(2.0000, 2.0020))
    b2[286] = math.log(mid(1.9900, 1.9920) / mid(1.9800, 1.9820))
    c2 = [0.0] * n
    c2[72] = math.log(mid(0.5100, 0.5102) / mid(0.5000, 0.5002))
    return (a1, b1, c1), (a2, b2, c2)


def test_timestamp_parsing():
    assert parse_timestamp("19700101 00:00:01.123") == 1123
    assert parse_timestamp("20210301 00:00:00.000") == (dt.date(2021, 3, 1) - dt.date(1970, 1, 1)).days * 86_400_000
    for bad in ("20210301 00:00:00", "2021031 00:00:00.000", "20210301 24:00:00.000", "garbage"):
        with pytest.raises(TickParseError):
            parse_timestamp(bad)


def test_tick_mid(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("EUR/USD,20200401 00:00:01.123,1.10000,1.10020\n")
    tick = parse_ticks(f).ticks[0]
    assert tick.mid == pytest.approx(1.1001) and tick.day == dt.date(2020, 4, 1)


def test_bad_rows_counted(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("EUR/USD,20200401 00:00:01.123,-1.1,1.1002\nEUR/USD,20200401 00:00:02.000,1.1,1.1002\n")
    with pytest.raises(TickParseError):
        parse_ticks(f)
    res = parse_ticks(f, max_errors=1)
    assert len(res.ticks) == 1 and res.errors[0][0] == 1


def test_empty_file(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("")
    assert parse_ticks(f).ticks == []


def test_last_tick_rule():
    base = parse_timestamp("20210301 00:00:00.000")
    ticks = [QuoteTick(1, base + 3 * 60_000, 1.1, 1.3), QuoteTick(1, base + 60_000, 0.9, 1.1)]
    grid = last_tick_grid(ticks, DAY1, 5)
    assert math.isnan(grid.mids[0]) and grid.mids[1] == pytest.approx(1.2)
    assert np.isnan(last_tick_grid([], DAY1).mids).all()
    one = last_tick_grid([QuoteTick(1, base, 0.9, 1.1)], DAY1)
    assert one.mids.size == 288 and np.all(one.mids == 1.0)


def test_correlation_examples():
    x = np.array([0.1, -0.2, 0.3, 0.05])
    r = realized_correlation([x, x], DAY1).matrix.entries
    assert r[0, 1] == pytest.approx(1.0) and r[0, 0] == 0.0
    assert realized_correlation([x, -x], DAY1).matrix.entries[0, 1] == pytest.approx(-1.0)
    alt = realized_correlation([[1, -1, 1, -1], [1, 1, -1, -1]], DAY1).matrix.entries
    assert alt[0, 1] == 0.0


def test_zero_variance_policy():
    flat = [0.0, 0.0, 0.0]
    moving = [0.1, -0.1, 0.2]
    with pytest.raises(IngestError):
        realized_correlation([flat, moving], DAY1)
    res = realized_correlation([flat, moving], DAY1, zero_variance="zero")
    assert res.matrix.entries[0, 1] == 0.0 and res.flags


def test_too_few_valid_returns():
    with pytest.raises(IngestError):
        realized_correlation([[np.nan, np.nan, 0.1], [0.1, 0.2, 0.3]], DAY1, min_valid=2)


def test_small_fixture_matches_hand_values(data_dir):
    ens = build_daily_ensemble([data_dir / "ticks_small.csv"], calendar=CalendarConfig())
    assert ens.size == 2 and ens.dim == 3 and ens.labels == ("2021-03-01", "2021-03-02")
    for day, series in zip(range(2), hand_returns()):
        m = ens.data[day]
        for i in range(3):
            for j in range(i + 1, 3):
                assert abs(m[i, j] - corr(series[i], series[j])) < 1e-12, (day, i, j)
    assert ens.meta["day_notes"]["2021-03-01"]["missing_returns"] == [0, 0, 2]


def test_explicit_pair_order(data_dir):
    pairs = {"CCC/USD": 1, "BBB/USD": 2, "AAA/USD": 3}
    ens = build_daily_ensemble([data_dir / "ticks_small.csv"], pairs)
    default = build_daily_ensemble([data_dir / "ticks_small.csv"])
    assert ens.data[0][0, 2] == pytest.approx(default.data[0][0, 2])
    assert ens.data[0][0, 1] == pytest.approx(default.data[0][1, 2])
    with pytest.raises(IngestError):
        build_daily_ensemble([data_dir / "ticks_small.csv"], {"CCC/USD": 1, "BBB/USD": 2, "AAA/USD": 4})


def test_calendar_exclusion(data_dir, tmp_path):
    cal = CalendarConfig(exclude=frozenset({"2021-03-01"}))
    ens = build_daily_ensemble([data_dir / "ticks_small.csv"], calendar=cal)
    assert ens.labels == ("2021-03-02",)
    (tmp_path / "cal.json").write_text(json.dumps({"exclude": ["2021-03-02"], "interval_minutes": 10}))
    cal = CalendarConfig.from_json(tmp_path / "cal.json")
    assert cal.intervals == 144 and cal.excluded(DAY2)
    (tmp_path / "cal2.json").write_text(json.dumps(["2021-03-01"]))
    assert CalendarConfig.from_json(tmp_path / "cal2.json").excluded(DAY1)
    (tmp_path / "cal3.json").write_text(json.dumps({"holidays": []}))
    with pytest.raises(ValueError):
        CalendarConfig.from_json(tmp_path / "cal3.json")
    assert CalendarConfig().excluded(dt.date(2020, 12, 25))
    assert not CalendarConfig(exclude_year_end=False).excluded(dt.date(2020, 12, 25))
    with pytest.raises(ValueError):
        CalendarConfig(interval_minutes=7)


@pytest.mark.parametrize("minutes", [5, 10, 15])
def test_interval_configurations(data_dir, minutes):
    cal = CalendarConfig(interval_minutes=minutes)
    ens = build_daily_ensemble([data_dir / "ticks_pipeline.csv"], calendar=cal)
    assert ens.dim == 5 and ens.size == 26
    assert ens.meta["interval_minutes"] == minutes
    assert np.all(np.abs(ens.upper()) <= 1.0)


def test_pipeline_fixture_skips(data_dir, caplog):
    ens = build_daily_ensemble([data_dir / "ticks_pipeline.csv"])
    assert "2021-12-10" in ens.meta["skipped_days"]
    for excluded in ("2021-12-24", "2021-12-25", "2021-12-26", "2021-12-31", "2021-12-10"):
        assert excluded not in ens.labels
    assert "skipping 2021-12-10" in caplog.text


def test_nineteen_pairs_give_171_entries(tmp_path):
    rng = np.random.default_rng(3)
    rows = []
    for p in range(19):
        price = 1.0 + p
        for k in range(200):
            t = k * 7 * 60_000 + p * 1000
            price *= math.exp(rng.normal(0, 1e-3))
            stamp = dt.datetime(2022, 5, 3) + dt.timedelta(milliseconds=t)
            rows.append(f"P{p:02d},{stamp:%Y%m%d %H:%M:%S}.000,{price:.8f},{price * 1.0001:.8f}")
    (tmp_path / "t.csv").write_text("\n".join(rows) + "\n")
    ens = build_daily_ensemble([tmp_path / "t.csv"])
    assert ens.dim == 19 and ens.upper().shape == (1, 171)


@given(st.floats(0.01, 100), st.integers(0, 2))
def test_price_scale_invariance(scale, which):
    rng = np.random.default_rng(4)
    base = parse_timestamp("20210301 00:00:00.000")
    ticks = {p: [QuoteTick(p, base + k * 300_000 + 17, *(2 * [math.exp(rng.normal(0, 0.01))]))
                 for k in range(100)] for p in range(3)}
    ref = realized_correlation([log_returns(last_tick_grid(ticks[p], DAY1)) for p in range(3)], DAY1)
    scaled = {p: [QuoteTick(p, t.timestamp, t.bid * (scale if p == which else 1), t.ask * (scale if p == which else 1))
                  for t in ticks[p]] for p in range(3)}
    out = realized_correlation([log_returns(last_tick_grid(scaled[p], DAY1)) for p in range(3)], DAY1)
    assert np.allclose(out.matrix.entries, ref.matrix.entries, atol=1e-12)
