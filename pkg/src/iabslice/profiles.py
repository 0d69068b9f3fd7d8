"""Daily traffic tables: slice demands of BS1 and access loads of the donors.

A day is split into 96 fifteen-minute intervals; interval ``k`` covers
minutes ``[15k, 15k + 15)`` after midnight. Slice demands are stored per
(interval, slice) and donor loads per (load profile, interval). Donor
stations are mapped to load profiles by :func:`assign_profile`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import DomainError, GenerationError, ProfileParseError
from .topology import CONGESTED_BS, build_topology

N_LOAD_PROFILES = 3
SLICES_FILE = "slices.csv"
LOADS_FILE = "loads.csv"
SLICES_HEADER = ["t", "i", "s", "thdl_mbps", "thul_mbps"]
LOADS_HEADER = ["profile", "t", "thdl_mbps", "thul_mbps"]


class SliceProfileEntry(NamedTuple):
    t: int
    i: int
    s: int
    thdl: float
    thul: float


class BsLoadEntry(NamedTuple):
    t: int
    thdl: float
    thul: float


def assign_profile(bs: int) -> int:
    """Load profile (1..3) used by donor station ``bs``."""
    if bs < 2:
        raise DomainError(f"only donor stations (id >= 2) carry a load profile, got {bs}")
    return ((bs - 1) % N_LOAD_PROFILES) + 1


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ProfileSet:
    """Immutable demand and load tables.

    ``slice_dl``/``slice_ul`` have shape (intervals, slices); ``load_dl``/
    ``load_ul`` have shape (3, intervals), row ``p - 1`` holding profile p.
    """

    slice_dl: np.ndarray
    slice_ul: np.ndarray
    load_dl: np.ndarray
    load_ul: np.ndarray
    n_bs: int = 7

    def __post_init__(self):
        for name in ("slice_dl", "slice_ul", "load_dl", "load_ul"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.slice_dl.ndim != 2 or self.slice_dl.shape != self.slice_ul.shape:
            raise DomainError("slice tables must share a 2-D (intervals, slices) shape")
        if self.load_dl.shape != (N_LOAD_PROFILES, self.n_intervals) or self.load_ul.shape != self.load_dl.shape:
            raise DomainError("load tables must have shape (3, intervals)")
        for name in ("slice_dl", "slice_ul", "load_dl", "load_ul"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)) or np.any(a < 0):
                raise DomainError(f"{name} must be finite and non-negative")
        if self.n_bs < 2:
            raise DomainError("need at least 2 base stations")

    @property
    def n_intervals(self) -> int:
        return self.slice_dl.shape[0]

    @property
    def n_slices(self) -> int:
        return self.slice_dl.shape[1]

    @property
    def bs_assignment(self) -> dict[int, int]:
        return {bs: assign_profile(bs) for bs in range(2, self.n_bs + 1)}

    @property
    def slice_profiles(self) -> list[SliceProfileEntry]:
        return [
            SliceProfileEntry(t, CONGESTED_BS, s + 1, float(self.slice_dl[t, s]), float(self.slice_ul[t, s]))
            for t in range(self.n_intervals)
            for s in range(self.n_slices)
        ]

    @property
    def load_profiles(self) -> dict[int, list[BsLoadEntry]]:
        return {
            p + 1: [BsLoadEntry(t, float(self.load_dl[p, t]), float(self.load_ul[p, t])) for t in range(self.n_intervals)]
            for p in range(N_LOAD_PROFILES)
        }

    def _check_t(self, t: int) -> None:
        if not 0 <= t < self.n_intervals:
            raise DomainError(f"interval {t} outside 0..{self.n_intervals - 1}")

    def slice_demand(self, t: int, s: int) -> tuple[float, float]:
        self._check_t(t)
        if not 1 <= s <= self.n_slices:
            raise DomainError(f"slice {s} outside 1..{self.n_slices}")
        return float(self.slice_dl[t, s - 1]), float(self.slice_ul[t, s - 1])

    def bs_load(self, bs: int, t: int) -> tuple[float, float]:
        if not 2 <= bs <= self.n_bs:
            raise DomainError(f"unknown donor station {bs}")
        self._check_t(t)
        p = assign_profile(bs) - 1
        return float(self.load_dl[p, t]), float(self.load_ul[p, t])

    def loads_at(self, t: int) -> dict[int, tuple[float, float]]:
        return {bs: self.bs_load(bs, t) for bs in range(2, self.n_bs + 1)}

    def aggregate_demand(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-interval (DL, UL) demand summed over slices."""
        return self.slice_dl.sum(axis=1), self.slice_ul.sum(axis=1)

    def __eq__(self, other):
        if not isinstance(other, ProfileSet):
            return NotImplemented
        return self.n_bs == other.n_bs and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("slice_dl", "slice_ul", "load_dl", "load_ul")
        )

    __hash__ = None


@dataclass(frozen=True)
class ProfileGenConfig:
    """Parameters of the default daily profiles.

    Aggregate slice demand in a direction is pushed to at least
    ``capacity_mbps + margin_mbps`` inside that direction's congestion
    window and to at most ``capacity_mbps - margin_mbps`` outside it.
    Windows are half-open interval ranges.
    """

    n_slices: int = 3
    n_intervals: int = 96
    n_bs: int = 7
    capacity_mbps: float = 1000.0
    seed: int = 0
    ul_window: tuple[int, int] = (22, 50)
    dl_window: tuple[int, int] = (58, 74)
    margin_mbps: float = 40.0
    jitter: float = 0.03
    # per-slice share of the aggregate, (DL, UL)
    dl_shares: tuple[float, ...] = (0.37, 0.33, 0.30)
    ul_shares: tuple[float, ...] = (0.30, 0.33, 0.37)
    guarantee_feasible: bool = True


def _bump(hours: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((hours - center) / width) ** 2)


def _aggregate_shapes(hours: np.ndarray, cap: float) -> tuple[np.ndarray, np.ndarray]:
    scale = cap / 1000.0
    dl = 524 + 330 * _bump(hours, 12.0, 4.0) + 520 * _bump(hours, 16.5, 1.7) - 300 * _bump(hours, 3.5, 2.5)
    ul = 560 + 260 * _bump(hours, 20.0, 3.0) + 820 * _bump(hours, 9.0, 2.6) - 300 * _bump(hours, 3.0, 2.5)
    return dl * scale, ul * scale


def _load_shapes(hours: np.ndarray, cap: float) -> tuple[np.ndarray, np.ndarray]:
    scale = cap / 1000.0
    bursts = sum(_bump(hours, c, 0.3) for c in (0.75, 2.75, 4.5, 13.25, 20.0, 23.0))
    p1_dl = 120 + 830 * bursts
    p1_ul = 80 + 860 * bursts
    p2_dl = 380 + 90 * _bump(hours, 13.0, 5.0)
    p2_ul = 300 + 70 * _bump(hours, 13.0, 5.0)
    p3_dl = 150 + 800 * _bump(hours, 12.0, 2.2)
    p3_ul = 100 + 780 * _bump(hours, 12.0, 2.2)
    dl = np.vstack([p1_dl, p2_dl, p3_dl]) * scale
    ul = np.vstack([p1_ul, p2_ul, p3_ul]) * scale
    return dl, ul


def _fit_window(parts: np.ndarray, window, cap: float, margin: float) -> np.ndarray:
    """Rescale each interval's slice demands so the aggregate honors the window."""
    lo, hi = window
    out = parts.copy()
    for t in range(len(parts)):
        total = parts[t].sum()
        if lo <= t < hi:
            target = max(total, cap + margin)
        else:
            target = min(total, cap - margin)
        if total > 0:
            out[t] = parts[t] * (target / total)
    return out


def _greedy_served(profiles: ProfileSet, cap: float) -> int:
    """Slices served by wired-first, widest-donor-next sequential allocation."""
    topo = build_topology(profiles.n_bs, cap, cap)
    served = 0
    for t in range(profiles.n_intervals):
        topo.release_interval()
        topo.set_bs_loads(profiles.loads_at(t))
        for s in range(1, profiles.n_slices + 1):
            dl, ul = profiles.slice_demand(t, s)
            order = [1] + sorted(topo.bs_ids[1:], key=lambda k: -min(topo.path_residual(k)))
            if any(topo.try_allocate(s, k, dl, ul, t) for k in order):
                served += 1
    return served


def generate_default_profiles(config: ProfileGenConfig | None = None) -> ProfileSet:
    config = config or ProfileGenConfig()
    cap, margin = config.capacity_mbps, config.margin_mbps
    S, T = config.n_slices, config.n_intervals
    if len(config.dl_shares) != S or len(config.ul_shares) != S:
        raise GenerationError("one DL and one UL share per slice is required")
    if not 0 < margin < cap:
        raise GenerationError("margin must lie strictly between 0 and capacity")

    rng = np.random.default_rng(config.seed)
    hours = (np.arange(T) + 0.5) * 24.0 / T
    agg_dl, agg_ul = _aggregate_shapes(hours, cap)
    noise = 1.0 + config.jitter * np.clip(rng.standard_normal((4, T, S)), -2.0, 2.0)
    dl_parts = agg_dl[:, None] * np.asarray(config.dl_shares)[None, :] * noise[0]
    ul_parts = agg_ul[:, None] * np.asarray(config.ul_shares)[None, :] * noise[1]
    dl_parts = _fit_window(dl_parts, config.dl_window, cap, margin)
    ul_parts = _fit_window(ul_parts, config.ul_window, cap, margin)

    load_dl, load_ul = _load_shapes(hours, cap)
    load_dl = load_dl * noise[2, :, :N_LOAD_PROFILES].T
    load_ul = load_ul * noise[3, :, :N_LOAD_PROFILES].T
    load_dl = np.clip(load_dl, 0.0, 0.98 * cap)
    load_ul = np.clip(load_ul, 0.0, 0.98 * cap)

    profiles = ProfileSet(
        np.round(dl_parts, 2), np.round(ul_parts, 2), np.round(load_dl, 2), np.round(load_ul, 2), n_bs=config.n_bs
    )
    total_cap = cap * profiles.n_bs
    agg_dl_r, agg_ul_r = profiles.aggregate_demand()
    if agg_dl_r.max() > total_cap or agg_ul_r.max() > total_cap:
        raise GenerationError("slice demand exceeds the total backhaul capacity")
    if config.guarantee_feasible:
        served = _greedy_served(profiles, cap)
        if served != S * T:
            raise GenerationError(f"only {served} of {S * T} slice-intervals can be served")
    return profiles


def save_profiles_csv(profiles: ProfileSet, path) -> None:
    """Write ``slices.csv`` and ``loads.csv`` into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / SLICES_FILE, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SLICES_HEADER)
        for e in profiles.slice_profiles:
            w.writerow([e.t, e.i, e.s, repr(e.thdl), repr(e.thul)])
    with open(path / LOADS_FILE, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(LOADS_HEADER)
        for p, entries in profiles.load_profiles.items():
            for e in entries:
                w.writerow([p, e.t, repr(e.thdl), repr(e.thul)])


def _read_rows(file: Path, header: list[str]):
    try:
        f = open(file, newline="")
    except OSError as exc:
        raise ProfileParseError(file, 0, f"cannot open: {exc.strerror}") from exc
    with f:
        reader = csv.reader(f)
        first = next(reader, None)
        if first != header:
            raise ProfileParseError(file, 1, f"expected header {','.join(header)}")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise ProfileParseError(file, line, f"expected {len(header)} fields, got {len(row)}")
            rows.append((line, row))
        return rows, reader.line_num


def _int_field(file, line, value, name):
    try:
        return int(value)
    except ValueError:
        raise ProfileParseError(file, line, f"{name} is not an integer: {value!r}") from None


def _mbps_field(file, line, value, name):
    try:
        x = float(value)
    except ValueError:
        raise ProfileParseError(file, line, f"{name} is not a number: {value!r}") from None
    if not math.isfinite(x) or x < 0:
        raise ProfileParseError(file, line, f"{name} must be a non-negative number, got {value!r}")
    return x


def load_profiles_csv(path, n_bs: int = 7, n_intervals: int = 96) -> ProfileSet:
    path = Path(path)
    slices_file, loads_file = path / SLICES_FILE, path / LOADS_FILE

    rows, last = _read_rows(slices_file, SLICES_HEADER)
    slice_vals: dict[tuple[int, int], tuple[float, float]] = {}
    for line, row in rows:
        t = _int_field(slices_file, line, row[0], "t")
        _int_field(slices_file, line, row[1], "i")
        s = _int_field(slices_file, line, row[2], "s")
        if not 0 <= t < n_intervals:
            raise ProfileParseError(slices_file, line, f"t={t} outside 0..{n_intervals - 1}")
        if s < 1:
            raise ProfileParseError(slices_file, line, f"slice id must be >= 1, got {s}")
        if (t, s) in slice_vals:
            raise ProfileParseError(slices_file, line, f"duplicate entry for t={t}, s={s}")
        slice_vals[(t, s)] = (
            _mbps_field(slices_file, line, row[3], "thdl_mbps"),
            _mbps_field(slices_file, line, row[4], "thul_mbps"),
        )
    if not slice_vals:
        raise ProfileParseError(slices_file, last, "no slice entries")
    n_slices = max(s for _, s in slice_vals)
    for s in range(1, n_slices + 1):
        missing = [t for t in range(n_intervals) if (t, s) not in slice_vals]
        if missing:
            raise ProfileParseError(
                slices_file, last, f"slice {s} is missing {len(missing)} interval(s), first t={missing[0]}"
            )

    rows, last = _read_rows(loads_file, LOADS_HEADER)
    load_vals: dict[tuple[int, int], tuple[float, float]] = {}
    for line, row in rows:
        p = _int_field(loads_file, line, row[0], "profile")
        t = _int_field(loads_file, line, row[1], "t")
        if not 1 <= p <= N_LOAD_PROFILES:
            raise ProfileParseError(loads_file, line, f"profile must be 1..{N_LOAD_PROFILES}, got {p}")
        if not 0 <= t < n_intervals:
            raise ProfileParseError(loads_file, line, f"t={t} outside 0..{n_intervals - 1}")
        if (p, t) in load_vals:
            raise ProfileParseError(loads_file, line, f"duplicate entry for profile={p}, t={t}")
        load_vals[(p, t)] = (
            _mbps_field(loads_file, line, row[2], "thdl_mbps"),
            _mbps_field(loads_file, line, row[3], "thul_mbps"),
        )
    for p in range(1, N_LOAD_PROFILES + 1):
        missing = [t for t in range(n_intervals) if (p, t) not in load_vals]
        if missing:
            raise ProfileParseError(
                loads_file, last, f"profile {p} is missing {len(missing)} interval(s), first t={missing[0]}"
            )

    slice_dl = np.array([[slice_vals[(t, s)][0] for s in range(1, n_slices + 1)] for t in range(n_intervals)])
    slice_ul = np.array([[slice_vals[(t, s)][1] for s in range(1, n_slices + 1)] for t in range(n_intervals)])
    load_dl = np.array([[load_vals[(p, t)][0] for t in range(n_intervals)] for p in range(1, N_LOAD_PROFILES + 1)])
    load_ul = np.array([[load_vals[(p, t)][1] for t in range(n_intervals)] for p in range(1, N_LOAD_PROFILES + 1)])
    return ProfileSet(slice_dl, slice_ul, load_dl, load_ul, n_bs=n_bs)
