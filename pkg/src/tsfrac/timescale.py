"""Bounded time scales as finite unions of closed intervals and isolated points."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence, Union

from .errors import EmptyRestriction, InvalidTimeScale, PointNotInTimeScale

#: Absolute tolerance of the membership test.
EPS_TS = 1e-12


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def start(self) -> float:
        return self.lo

    @property
    def end(self) -> float:
        return self.hi


@dataclass(frozen=True)
class Point:
    t: float

    @property
    def start(self) -> float:
        return self.t

    @property
    def end(self) -> float:
        return self.t


Segment = Union[Interval, Point]


class RightClass(enum.Enum):
    RightDense = "right-dense"
    RightScattered = "right-scattered"


class LeftClass(enum.Enum):
    LeftDense = "left-dense"
    LeftScattered = "left-scattered"


class PointClass(NamedTuple):
    right: RightClass
    left: LeftClass


def _describe(seg: Segment) -> str:
    if isinstance(seg, Interval):
        return f"interval [{seg.lo!r}, {seg.hi!r}]"
    return f"point {seg.t!r}"


@dataclass(frozen=True)
class TimeScale:
    """An ordered, pairwise disjoint tuple of segments."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise InvalidTimeScale("time scale needs at least one segment")
        for k, seg in enumerate(segs):
            if not isinstance(seg, (Interval, Point)):
                raise InvalidTimeScale(f"segment {k} is not an Interval or Point")
            ends = (seg.lo, seg.hi) if isinstance(seg, Interval) else (seg.t,)
            if not all(math.isfinite(x) for x in ends):
                raise InvalidTimeScale(f"segment {k} ({_describe(seg)}) has a non-finite endpoint")
            if isinstance(seg, Interval) and not seg.lo < seg.hi:
                raise InvalidTimeScale(f"segment {k} ({_describe(seg)}) needs lo < hi")
        for k in range(1, len(segs)):
            prev, cur = segs[k - 1], segs[k]
            if not cur.start > prev.end + EPS_TS:
                raise InvalidTimeScale(
                    f"segment {k} ({_describe(cur)}) overlaps or precedes segment {k - 1} ({_describe(prev)})"
                )

    @property
    def a(self) -> float:
        return self.segments[0].start

    @property
    def b(self) -> float:
        return self.segments[-1].end

    @property
    def is_discrete(self) -> bool:
        return all(isinstance(s, Point) for s in self.segments)

    def _locate(self, t: float) -> int:
        for k, seg in enumerate(self.segments):
            if seg.start - EPS_TS <= t <= seg.end + EPS_TS:
                return k
        raise PointNotInTimeScale(f"{t!r} is not a point of the time scale")

    def __contains__(self, t: float) -> bool:
        try:
            self._locate(t)
        except PointNotInTimeScale:
            return False
        return True

    def scattered_points(self) -> list[float]:
        """Every point that is right- or left-scattered, ascending."""
        out = []
        for k, seg in enumerate(self.segments):
            cands = [seg.start] if isinstance(seg, Point) else [seg.lo, seg.hi]
            for t in cands:
                cls = classify(self, t)
                if cls != (RightClass.RightDense, LeftClass.LeftDense) and t not in out:
                    out.append(t)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TimeScale":
        try:
            raw = data["segments"]
        except (KeyError, TypeError):
            raise InvalidTimeScale("time-scale config needs a 'segments' list") from None
        if not isinstance(raw, list):
            raise InvalidTimeScale("'segments' must be a list")
        segs: list[Segment] = []
        for k, item in enumerate(raw):
            if not isinstance(item, dict):
                raise InvalidTimeScale(f"segment {k} must be an object")
            kind = item.get("kind")
            try:
                if kind == "interval":
                    lo, hi = float(item["lo"]), float(item["hi"])
                    if not lo < hi:
                        raise InvalidTimeScale(f"segment {k} (interval lo={lo!r}, hi={hi!r}) needs lo < hi")
                    segs.append(Interval(lo, hi))
                elif kind == "point":
                    segs.append(Point(float(item["t"])))
                else:
                    raise InvalidTimeScale(f"segment {k} has unknown kind {kind!r}")
            except (KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, InvalidTimeScale):
                    raise
                raise InvalidTimeScale(f"segment {k} is malformed: {exc}") from None
        return cls(tuple(segs))

    def to_dict(self) -> dict:
        segs = []
        for seg in self.segments:
            if isinstance(seg, Interval):
                segs.append({"kind": "interval", "lo": seg.lo, "hi": seg.hi})
            else:
                segs.append({"kind": "point", "t": seg.t})
        return {"segments": segs}


def load_timescale(path: str | Path) -> TimeScale:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidTimeScale(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidTimeScale(f"{path} is not valid JSON: {exc}") from None
    return TimeScale.from_dict(data)


def discrete(points: Sequence[float]) -> TimeScale:
    return TimeScale(tuple(Point(float(p)) for p in sorted(points)))


def interval(lo: float, hi: float) -> TimeScale:
    return TimeScale((Interval(float(lo), float(hi)),))


def sigma(ts: TimeScale, t: float) -> float:
    k = ts._locate(t)
    seg = ts.segments[k]
    if isinstance(seg, Interval) and t < seg.hi - EPS_TS:
        return t
    if k + 1 < len(ts.segments):
        return ts.segments[k + 1].start
    return t


def rho(ts: TimeScale, t: float) -> float:
    k = ts._locate(t)
    seg = ts.segments[k]
    if isinstance(seg, Interval) and t > seg.lo + EPS_TS:
        return t
    if k > 0:
        return ts.segments[k - 1].end
    return t


def graininess(ts: TimeScale, t: float) -> float:
    return sigma(ts, t) - t


def classify(ts: TimeScale, t: float) -> PointClass:
    right = RightClass.RightScattered if sigma(ts, t) > t else RightClass.RightDense
    left = LeftClass.LeftScattered if rho(ts, t) < t else LeftClass.LeftDense
    return PointClass(right, left)


def restrict(ts: TimeScale, lo: float, hi: float) -> TimeScale:
    """Return the time scale ``[lo, hi]`` intersected with ``ts``."""
    if lo not in ts or hi not in ts:
        raise PointNotInTimeScale(f"restriction bounds {lo!r}, {hi!r} must lie in the time scale")
    if not lo < hi:
        raise EmptyRestriction(f"restriction needs lo < hi, got {lo!r}, {hi!r}")
    segs: list[Segment] = []
    for seg in ts.segments:
        if seg.end < lo - EPS_TS or seg.start > hi + EPS_TS:
            continue
        if isinstance(seg, Point):
            segs.append(seg)
            continue
        s, e = max(seg.lo, lo), min(seg.hi, hi)
        segs.append(Interval(s, e) if e - s > EPS_TS else Point(s))
    return TimeScale(tuple(segs))
