"""Quote ticks to daily realized-correlation matrices.

Tick files are CSV rows ``pair,timestamp,bid,ask`` with timestamps
``YYYYMMDD HH:MM:SS.mmm`` in UTC (an optional header row starting with
``pair`` is skipped).  Each UTC day is sampled on the grid
``00:00 + i * interval`` (``i = 0 .. n-1``) with the last-tick rule, log
returns are taken between consecutive grid points, and correlations are the
uncentred realized estimator over intervals where both pairs have a return.
"""
from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .ensemble import CorrelationMatrix, Ensemble, validate_matrix

log = logging.getLogger(__name__)

MS_PER_DAY = 86_400_000
YEAR_END_DAYS = ((12, 24), (12, 25), (12, 26), (12, 31), (1, 1), (1, 2))
ZERO_VARIANCE_POLICIES = ("error", "zero")


class TickParseError(ValueError):
    pass


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class QuoteTick:
    pair_index: int
    timestamp: int  # ms since epoch, UTC
    bid: float
    ask: float

    @property
    def mid(self) -> float:
        return (self.bid + self.ask) / 2.0

    @property
    def day(self) -> dt.date:
        return epoch_ms_to_date(self.timestamp)


@dataclass(frozen=True)
class TickParse:
    ticks: list
    errors: list  # (line number, reason)
    pairs: dict


@dataclass(frozen=True)
class PriceGrid:
    pair_index: int
    day: dt.date
    mids: np.ndarray  # nan marks an interval before the first tick


@dataclass(frozen=True)
class ReturnSeries:
    pair_index: int
    day: dt.date
    returns: np.ndarray


@dataclass(frozen=True)
class CalendarConfig:
    exclude: frozenset = frozenset()
    interval_minutes: int = 5
    exclude_year_end: bool = True
    min_valid_returns: int = 2
    zero_variance: str = "error"

    def __post_init__(self):
        if MS_PER_DAY % (self.interval_minutes * 60_000):
            raise ValueError("interval must divide the day evenly")
        if self.zero_variance not in ZERO_VARIANCE_POLICIES:
            raise ValueError(f"zero_variance must be one of {ZERO_VARIANCE_POLICIES}")
        object.__setattr__(self, "exclude", frozenset(
            d if isinstance(d, dt.date) else dt.date.fromisoformat(str(d)) for d in self.exclude))

    @classmethod
    def from_json(cls, path) -> "CalendarConfig":
        """Accepts a bare list of ISO dates or ``{"exclude": [...], "interval_minutes": m, ...}``."""
        raw = json.loads(Path(path).read_text())
        if isinstance(raw, list):
            return cls(exclude=frozenset(raw))
        keys = {"exclude", "interval_minutes", "exclude_year_end", "min_valid_returns", "zero_variance"}
        extra = set(raw) - keys
        if extra:
            raise ValueError(f"unknown calendar keys: {sorted(extra)}")
        raw = dict(raw)
        raw["exclude"] = frozenset(raw.get("exclude", ()))
        return cls(**raw)

    def excluded(self, day: dt.date) -> bool:
        return day in self.exclude or (self.exclude_year_end and (day.month, day.day) in YEAR_END_DAYS)

    @property
    def intervals(self) -> int:
        return MS_PER_DAY // (self.interval_minutes * 60_000)


def epoch_ms_to_date(ms: int) -> dt.date:
    return (dt.datetime(1970, 1, 1) + dt.timedelta(milliseconds=ms)).date()


def date_start_ms(day: dt.date) -> int:
    return (day - dt.date(1970, 1, 1)).days * MS_PER_DAY


def parse_timestamp(text: str) -> int:
    """``YYYYMMDD HH:MM:SS.mmm`` (UTC) to integer milliseconds since the epoch."""
    text = text.strip()
    try:
        date_part, time_part = text.split(" ")
        hms, frac = time_part.split(".")
        if len(date_part) != 8 or len(frac) != 3:
            raise ValueError
        day = dt.date(int(date_part[:4]), int(date_part[4:6]), int(date_part[6:]))
        h, m, s = (int(x) for x in hms.split(":"))
        if not (0 <= h < 24 and 0 <= m < 60 and 0 <= s < 60):
            raise ValueError
    except ValueError:
        raise TickParseError(f"bad timestamp {text!r}") from None
    return date_start_ms(day) + ((h * 60 + m) * 60 + s) * 1000 + int(frac)


def parse_ticks(path, pairs: Mapping[str, int] | None = None, max_errors: int = 0) -> TickParse:
    """Read a tick CSV in file order.

    ``pairs`` maps symbols to indices ``1..P``; when omitted, indices follow
    the sorted set of symbols in the file.  Bad rows are counted; more than
    ``max_errors`` of them raises :class:`TickParseError`.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (lineno == 1 and rec[0].strip().lower() == "pair"):
                continue
            rows.append((lineno, rec))
    if pairs is None:
        pairs = {s: k + 1 for k, s in enumerate(sorted({r[0].strip() for _, r in rows if r}))}
    pairs = dict(pairs)
    ticks, errors = [], []
    for lineno, rec in rows:
        try:
            if len(rec) != 4:
                raise TickParseError(f"expected 4 fields, got {len(rec)}")
            sym = rec[0].strip()
            if sym not in pairs:
                raise TickParseError(f"unknown pair {sym!r}")
            ts = parse_timestamp(rec[1])
            try:
                bid, ask = float(rec[2]), float(rec[3])
            except ValueError:
                raise TickParseError("unparseable price") from None
            if not (bid > 0 and ask > 0 and math.isfinite(bid) and math.isfinite(ask)):
                raise TickParseError("non-positive price")
            ticks.append(QuoteTick(int(pairs[sym]), ts, bid, ask))
        except TickParseError as exc:
            errors.append((lineno, str(exc)))
    if len(errors) > max_errors:
        first = "; ".join(f"line {n}: {r}" for n, r in errors[:3])
        raise TickParseError(f"{len(errors)} bad rows exceed budget {max_errors} ({first})")
    return TickParse(ticks, errors, pairs)


def last_tick_grid(ticks: Sequence[QuoteTick], day: dt.date, interval_minutes: int = 5) -> PriceGrid:
    """Mid of the latest tick at or before each grid time of ``day``."""
    step = interval_minutes * 60_000
    if MS_PER_DAY % step:
        raise ValueError("interval must divide the day evenly")
    start = date_start_ms(day)
    grid = start + step * np.arange(MS_PER_DAY // step)
    own = sorted((t for t in ticks if start <= t.timestamp < start + MS_PER_DAY), key=lambda t: t.timestamp)
    times = [t.timestamp for t in own]
    mids = np.full(grid.size, np.nan)
    for k, g in enumerate(grid):
        pos = bisect_right(times, int(g))
        if pos:
            mids[k] = own[pos - 1].mid
    pair = own[0].pair_index if own else (ticks[0].pair_index if ticks else 0)
    return PriceGrid(pair, day, mids)


def log_returns(grid: PriceGrid) -> ReturnSeries:
    p = grid.mids
    return ReturnSeries(grid.pair_index, grid.day, np.log(p[1:] / p[:-1]))


@dataclass(frozen=True)
class CorrelationResult:
    matrix: CorrelationMatrix
    flags: list = field(default_factory=list)
    valid_counts: np.ndarray | None = None


def realized_correlation(returns: Sequence, day, min_valid: int = 2,
                         zero_variance: str = "error") -> CorrelationResult:
    """Uncentred realized correlation over jointly defined intervals; diagonal set to zero."""
    series = [np.asarray(r.returns if isinstance(r, ReturnSeries) else r, dtype=float) for r in returns]
    d = len(series)
    if d == 0 or len({s.size for s in series}) != 1:
        raise IngestError("return series must be non-empty and aligned")
    r = np.array(series)
    ok = np.isfinite(r)
    counts = ok.sum(axis=1)
    flags = [f"pair {k + 1}: only {int(c)} valid returns" for k, c in enumerate(counts) if c < min_valid]
    if flags:
        raise IngestError("; ".join(flags))
    rz = np.where(ok, r, 0.0)
    both = ok.astype(float)
    cross = rz @ rz.T
    sq = rz ** 2
    norm = (sq @ both.T) * (both @ sq.T)  # sum over joint intervals of r_I^2 and r_J^2
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1, d):
            if norm[i, j] == 0:
                if zero_variance == "error":
                    raise IngestError(f"pairs {i + 1} and {j + 1}: zero variance on {day}")
                flags.append(f"pairs {i + 1},{j + 1}: zero variance, set to 0")
                continue
            out[i, j] = out[j, i] = cross[i, j] / math.sqrt(norm[i, j])
    label = day.isoformat() if isinstance(day, dt.date) else str(day)
    return CorrelationResult(validate_matrix(out, label), flags, counts)


def build_daily_ensemble(tick_files: Iterable, pairs: Mapping[str, int] | None = None,
                         calendar: CalendarConfig | None = None, max_errors: int = 0) -> Ensemble:
    """One correlation matrix per included UTC day that has data for every pair."""
    calendar = calendar or CalendarConfig()
    ticks: list = []
    for path in tick_files:
        parsed = parse_ticks(path, pairs, max_errors)
        if pairs is None:
            pairs = parsed.pairs
        ticks.extend(parsed.ticks)
    if pairs is None:
        raise IngestError("no tick files given")
    indices = sorted(set(pairs.values()))
    if indices != list(range(1, len(indices) + 1)):
        raise IngestError("pair indices must be 1..P")
    by_key: dict = defaultdict(list)
    for t in ticks:
        by_key[(t.day, t.pair_index)].append(t)
    days = sorted({k[0] for k in by_key})
    matrices, skipped, notes = [], [], {}
    for day in days:
        if calendar.excluded(day):
            continue
        if any((day, p) not in by_key for p in indices):
            log.warning("skipping %s: no ticks for some pairs", day)
            skipped.append(day.isoformat())
            continue
        rets = [log_returns(last_tick_grid(by_key[(day, p)], day, calendar.interval_minutes))
                for p in indices]
        try:
            res = realized_correlation(rets, day, calendar.min_valid_returns, calendar.zero_variance)
        except IngestError as exc:
            log.warning("skipping %s: %s", day, exc)
            skipped.append(day.isoformat())
            continue
        matrices.append(res.matrix)
        missing = [int(len(rets[0].returns) - c) for c in res.valid_counts]
        if res.flags or any(missing):
            notes[day.isoformat()] = {"flags": res.flags, "missing_returns": missing}
    meta = {"interval_minutes": calendar.interval_minutes, "pairs": dict(pairs),
            "skipped_days": skipped, "day_notes": notes}
    return Ensemble.from_matrices(matrices, dim=len(indices), meta=meta)
