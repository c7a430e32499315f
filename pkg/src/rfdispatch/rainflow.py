"""Rainflow cycle counting over battery state-of-charge profiles.

The counter reduces a SoC series to turning points and splits it at the
global extrema: the swing between the global maximum and minimum is the
deepest half cycle, the stretches before and after are counted the same
way recursively, and oscillations hanging off a half cycle's monotone
envelope close into full cycles (two half cycles of equal depth and
opposite direction).

Every half cycle records the power intervals it occupies.  Where a full
cycle rejoins the enclosing envelope mid-interval, that interval is shared
between the two cycles (a *junction*) and each owner keeps a fractional
weight so that depths can be rebuilt from charging/discharging power.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .degradation import BatteryParams

CHARGE = "charge"
DISCHARGE = "discharge"
KIND_HALF = "half"
KIND_FULL = "full-member"

__all__ = [
    "CHARGE",
    "DISCHARGE",
    "KIND_HALF",
    "KIND_FULL",
    "SocProfile",
    "TurningPoints",
    "HalfCycle",
    "CycleSet",
    "extract_turning_points",
    "count_cycles",
    "half_cycle_depths",
    "cycle_depths_from_power",
    "read_profile_csv",
    "write_cycles_json",
]


@dataclass(frozen=True)
class SocProfile:
    """State-of-charge samples (fractions of capacity) at fixed spacing.

    A profile with ``T + 1`` samples spans ``T`` power intervals; interval
    ``t`` covers the transition from sample ``t`` to sample ``t + 1``.
    ``t_s`` is the sample spacing in hours.
    """

    values: np.ndarray
    t_s: float = 1.0

    def __post_init__(self) -> None:
        values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if values.ndim != 1 or values.size < 1:
            raise ValueError("profile needs at least one sample")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise ValueError(f"non-finite SoC sample at row {bad}")
        if values.min() < -1e-9 or values.max() > 1.0 + 1e-9:
            raise ValueError("SoC samples must lie in [0, 1]")
        if not self.t_s > 0:
            raise ValueError("sample spacing t_s must be positive")
        object.__setattr__(self, "values", values)

    @property
    def intervals(self) -> int:
        """Number of power intervals (samples minus one)."""
        return self.values.size - 1


@dataclass(frozen=True)
class TurningPoints:
    """Alternating local extrema of a profile (indices into the samples)."""

    indices: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class HalfCycle:
    """One half cycle identified by the counter.

    ``intervals`` lists the power intervals the cycle occupies, with
    ``interval_weights`` giving the fraction of each interval's SoC change
    that belongs to this cycle (1.0 except at junctions).
    ``junction_intervals`` is the subset shared with other cycles of the
    same direction.  ``peak_sample``/``valley_sample`` are the sample
    indices of the cycle's extremes; ``pair_id`` links the two members of
    a full cycle and is ``None`` for plain half cycles.
    """

    depth: float
    direction: str
    kind: str
    intervals: tuple[int, ...]
    junction_intervals: tuple[int, ...]
    interval_weights: tuple[float, ...]
    peak_sample: int
    valley_sample: int
    pair_id: int | None = None


@dataclass(frozen=True)
class CycleSet:
    """All half cycles of a profile plus the interval count they cover."""

    half_cycles: tuple[HalfCycle, ...]
    source_length: int

    def depths(self, direction: str | None = None) -> np.ndarray:
        if direction is None:
            return np.array([h.depth for h in self.half_cycles])
        return np.array([h.depth for h in self.half_cycles if h.direction == direction])

    def grouped(self) -> list[tuple[float, str, tuple[HalfCycle, ...]]]:
        """Cycles with full pairs merged: (depth, 'half'|'full', members)."""
        out: list[tuple[float, str, tuple[HalfCycle, ...]]] = []
        seen: dict[int, int] = {}
        for h in self.half_cycles:
            if h.pair_id is None:
                out.append((h.depth, "half", (h,)))
            elif h.pair_id in seen:
                i = seen[h.pair_id]
                depth, _, members = out[i]
                out[i] = (depth, "full", members + (h,))
            else:
                seen[h.pair_id] = len(out)
                out.append((h.depth, "full", (h,)))
        return out


def extract_turning_points(profile: SocProfile | np.ndarray) -> TurningPoints:
    """Reduce a profile to its alternating local extrema.

    Flat runs collapse to their first sample; the first and last distinct
    samples are always kept, so a constant profile yields a single point.
    """
    values = profile.values if isinstance(profile, SocProfile) else np.asarray(profile, float)
    idx = _turning_indices(values)
    return TurningPoints(indices=idx, values=values[idx])


def _turning_indices(values: np.ndarray) -> np.ndarray:
    n = values.size
    if n == 1:
        return np.zeros(1, dtype=np.int64)
    keep = np.empty(n, dtype=bool)
    keep[0] = True
    np.not_equal(values[1:], values[:-1], out=keep[1:])
    comp = np.flatnonzero(keep)
    if comp.size == 1:
        return comp
    d = np.sign(np.diff(values[comp]))
    turn = np.empty(comp.size, dtype=bool)
    turn[0] = True
    turn[-1] = True
    turn[1:-1] = d[1:] != d[:-1]
    return comp[turn]


@dataclass
class _Rec:
    direction: str
    kind: str
    peak_tp: int
    valley_tp: int
    pair: int
    pieces: list[tuple[int, float, float]] = field(default_factory=list)


def _extract_cycles(values: np.ndarray):
    """Core counter on raw samples.

    Returns ``(recs, closes, ti, tv)`` where ``recs`` hold direction, kind,
    extremes (turning-point positions) and per-segment SoC bands, and
    ``closes`` are ``(segment, level, member, parent)`` tuples marking where
    a full cycle's second member rejoins the enclosing envelope.
    """
    ti = _turning_indices(values)
    tv = values[ti]
    n = ti.size
    recs: list[_Rec] = []
    closes: list[tuple[int, float, int, int]] = []
    if n < 2:
        return recs, closes, ti, tv

    excursions: list[tuple[int, int, int, float, bool, int]] = []
    pair_counter = 0

    def walk(rid: int, anchor: int, end_tp: int, close_seg: int,
             close_level: float, rising: bool) -> None:
        # Trace the monotone envelope from `anchor` to `end_tp` (or to a
        # virtual crossing of `close_level` inside segment `close_seg`).
        # Oscillations that leave the envelope are queued as excursions.
        pieces = recs[rid].pieces
        level = tv[anchor]
        last_seg = close_seg if close_seg >= 0 else end_tp - 1
        exc_anchor = -1
        for k in range(anchor, last_seg + 1):
            cap = close_level if (close_seg >= 0 and k == last_seg) else tv[k + 1]
            extends = cap >= level if rising else cap <= level
            if extends:
                if exc_anchor >= 0:
                    excursions.append((exc_anchor, k, k, level, rising, rid))
                    exc_anchor = -1
                if cap != level:
                    pieces.append((k, min(level, cap), max(level, cap)))
                    level = cap
            elif exc_anchor < 0:
                exc_anchor = k
        if exc_anchor >= 0:  # pragma: no cover - envelope always rejoins
            raise AssertionError("open excursion at end of envelope walk")

    # Split at global extrema: the swing between them is a half cycle and
    # the left/right remainders are counted the same way.  Earliest
    # occurrence wins when an extreme value repeats.
    spans = [(0, n - 1)]
    while spans:
        lo, hi = spans.pop()
        if hi - lo < 1:
            continue
        window = tv[lo:hi + 1]
        im = lo + int(np.argmax(window))
        jm = lo + int(np.argmin(window))
        if tv[im] == tv[jm]:
            continue
        recs.append(_Rec(DISCHARGE if im < jm else CHARGE, KIND_HALF, im, jm, -1))
        rid = len(recs) - 1
        if im < jm:
            walk(rid, im, jm, -1, 0.0, rising=False)
            spans.append((lo, im))
            spans.append((jm, hi))
        else:
            walk(rid, jm, im, -1, 0.0, rising=True)
            spans.append((lo, jm))
            spans.append((im, hi))

    # Excursions close into full cycles: one member from the envelope level
    # down/up to the excursion extreme, the other back to the rejoin point.
    while excursions:
        anchor, last, close_seg, level, parent_rising, parent = excursions.pop()
        first = anchor + 1
        inner = tv[first:last + 1]
        if parent_rising:
            ext = first + int(np.argmin(inner))
            peak, valley = anchor, ext
            dir1, dir2 = DISCHARGE, CHARGE
        else:
            ext = first + int(np.argmax(inner))
            peak, valley = ext, anchor
            dir1, dir2 = CHARGE, DISCHARGE
        pair = pair_counter
        pair_counter += 1
        recs.append(_Rec(dir1, KIND_FULL, peak, valley, pair))
        walk(len(recs) - 1, anchor, ext, -1, 0.0, rising=not parent_rising)
        recs.append(_Rec(dir2, KIND_FULL, peak, valley, pair))
        m2 = len(recs) - 1
        walk(m2, ext, close_seg, close_seg, level, rising=parent_rising)
        closes.append((close_seg, level, m2, parent))

    return recs, closes, ti, tv


def count_cycles(profile: SocProfile | np.ndarray) -> CycleSet:
    """Count the cycles of a profile, with interval assignments.

    Full cycles appear as two ``full-member`` half cycles of equal depth
    and opposite direction sharing a ``pair_id``.  Zero-depth cycles are
    never emitted and unchanging intervals belong to no cycle.
    """
    values = profile.values if isinstance(profile, SocProfile) else np.asarray(profile, float)
    recs, _, ti, tv = _extract_cycles(values)
    t_count = values.size - 1

    # Expand per-segment SoC bands into sample intervals with weights.
    assignments: list[list[tuple[int, float]]] = []
    owners: dict[int, int] = {}
    for rec in recs:
        assigned: list[tuple[int, float]] = []
        for seg, lo, hi in rec.pieces:
            a, b = int(ti[seg]), int(ti[seg + 1])
            for t in range(a, b):
                s0, s1 = values[t], values[t + 1]
                lo_t, hi_t = (s0, s1) if s1 >= s0 else (s1, s0)
                if hi_t == lo_t:
                    continue
                ov = min(hi, hi_t) - max(lo, lo_t)
                if ov <= 0.0:
                    continue
                assigned.append((t, ov / (hi_t - lo_t)))
        assigned.sort()
        assignments.append(assigned)
        for t, _ in assigned:
            owners[t] = owners.get(t, 0) + 1

    half_cycles = []
    order = []
    for i, (rec, assigned) in enumerate(zip(recs, assignments)):
        depth = float(abs(tv[rec.peak_tp] - tv[rec.valley_tp]))
        junction = tuple(t for t, _ in assigned if owners[t] > 1)
        half_cycles.append(HalfCycle(
            depth=depth,
            direction=rec.direction,
            kind=rec.kind,
            intervals=tuple(t for t, _ in assigned),
            junction_intervals=junction,
            interval_weights=tuple(w for _, w in assigned),
            peak_sample=int(ti[rec.peak_tp]),
            valley_sample=int(ti[rec.valley_tp]),
            pair_id=rec.pair if rec.pair >= 0 else None,
        ))
        first_t = assigned[0][0] if assigned else t_count
        order.append((first_t, min(tv[rec.peak_tp], tv[rec.valley_tp]), i))

    ranked = [half_cycles[i] for _, _, i in sorted(order)]
    return CycleSet(half_cycles=tuple(ranked), source_length=t_count)


def half_cycle_depths(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fast path: depths and signs (+1 charge, -1 discharge) of all half cycles."""
    from ._kernel import rainflow_depths

    return rainflow_depths(np.asarray(values, dtype=float))


def cycle_depths_from_power(c: np.ndarray, d: np.ndarray, cycles: CycleSet,
                            params: "BatteryParams") -> np.ndarray:
    """Rebuild cycle depths from charging/discharging power.

    Each interval contributes its net SoC change
    ``(c * eta_c - d / eta_d) * t_s / E`` scaled by the owner's junction
    weight, so the result matches the SoC-based depths of ``cycles`` (which
    must have been counted on the trajectory induced by ``c`` and ``d``).
    """
    c = np.asarray(c, dtype=float)
    d = np.asarray(d, dtype=float)
    if c.shape != d.shape or c.size != cycles.source_length:
        raise ValueError("power vectors must have length equal to the interval count")
    delta = (c * params.eta_c - d / params.eta_d) * params.t_s / params.E
    depths = np.empty(len(cycles.half_cycles))
    for i, h in enumerate(cycles.half_cycles):
        sgn = 1.0 if h.direction == CHARGE else -1.0
        acc = 0.0
        for t, w in zip(h.intervals, h.interval_weights):
            acc += w * sgn * delta[t]
        depths[i] = acc
    return depths


def read_profile_csv(path: str | Path, t_s: float = 1.0) -> SocProfile:
    """Read a profile from CSV with header ``t,soc``.

    Raises ``ValueError`` with the offending line number on malformed rows.
    """
    rows: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["t", "soc"]:
            raise ValueError(f"{path}: expected header 't,soc'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise ValueError(f"{path}: line {lineno}: expected two columns")
            try:
                soc = float(row[1])
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad SoC value {row[1]!r}") from None
            if not np.isfinite(soc):
                raise ValueError(f"{path}: line {lineno}: non-finite SoC value")
            rows.append(soc)
    if not rows:
        raise ValueError(f"{path}: no samples")
    return SocProfile(values=np.array(rows), t_s=t_s)


def cycles_to_dicts(cycles: CycleSet) -> list[dict]:
    """JSON-ready view: one dict per half cycle."""
    return [
        {
            "depth": h.depth,
            "direction": h.direction,
            "kind": h.kind,
            "intervals": list(h.intervals),
            "junction_intervals": list(h.junction_intervals),
        }
        for h in cycles.half_cycles
    ]


def write_cycles_json(cycles: CycleSet, path: str | Path) -> None:
    tmp = Path(path).with_suffix(".tmp")
    tmp.write_text(json.dumps(cycles_to_dicts(cycles), indent=2) + "\n")
    tmp.replace(path)
