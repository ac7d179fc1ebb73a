"""Which mixture component produces which event.

Within one dream, every frame is credited to the component holding the
largest mixture weight at that step. The *main component* for an event is
the component credited with most of the frames showing that event. Its
*event share* is the fraction of event frames credited to it; its *overall
share* is the fraction of all frames of the dream credited to it. Across
dreams, the paired shares are compared with the Mann-Whitney U test.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ParameterError
from .events import FLAG_NAMES, TRACKED_EVENTS
from .stats import mann_whitney_u


@dataclass(frozen=True)
class DreamShare:
    model_id: str
    dream_index: int
    main_component: int
    event_share: float
    overall_share: float
    event_frames: int
    frames: int
    tie: bool


@dataclass
class EventStats:
    event: str
    dreams: list[DreamShare]
    zero_event_dreams: int


def _require_event(event: str) -> None:
    if event not in FLAG_NAMES:
        raise ParameterError(f"unknown event {event!r}; known events: {', '.join(FLAG_NAMES)}")


def main_component_stats(traces, event: str) -> EventStats:
    """Per-dream main component and shares; dreams without the event are skipped."""
    _require_event(event)
    rows, skipped = [], 0
    for tr in traces:
        flags = tr.flag(event)
        argmax = np.asarray(tr.argmax)
        K = tr.pi.shape[1]
        n_event = int(flags.sum())
        if n_event == 0:
            skipped += 1
            continue
        counts = np.bincount(argmax[flags], minlength=K)
        best = int(counts.max())
        main = int(np.argmax(counts))
        rows.append(DreamShare(
            model_id=tr.model_id,
            dream_index=tr.dream_index,
            main_component=main,
            event_share=best / n_event,
            overall_share=float(np.mean(argmax == main)),
            event_frames=n_event,
            frames=len(argmax),
            tie=int(np.sum(counts == best)) > 1,
        ))
    return EventStats(event, rows, skipped)


@dataclass
class AttributionRow:
    event: str
    dreams: list[DreamShare]
    u: float | None
    p: float | None
    dream_count: int
    event_frames: int
    zero_event_dreams: int
    ties: int
    insufficient: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["dreams"] = [asdict(x) for x in self.dreams]
        return d


@dataclass
class AttributionReport:
    rows: list[AttributionRow]
    metadata: dict = field(default_factory=dict)
    committed: dict = field(default_factory=dict)

    def row(self, event: str) -> AttributionRow:
        for r in self.rows:
            if r.event == event:
                return r
        raise KeyError(event)

    def to_json(self) -> str:
        doc = {"metadata": self.metadata, "rows": [r.to_json() for r in self.rows], "committed": self.committed}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["event", "model_id", "dream_index", "main_component", "event_share",
                    "overall_share", "event_frames", "frames", "tie"])
        for r in self.rows:
            for d in r.dreams:
                w.writerow([r.event, d.model_id, d.dream_index, d.main_component, repr(d.event_share),
                            repr(d.overall_share), d.event_frames, d.frames, int(d.tie)])
        return buf.getvalue()


def build_report(traces, events=TRACKED_EVENTS, metadata: dict | None = None) -> AttributionReport:
    """One row per tracked event: shares per dream and the U test of event vs overall share.

    Rows backed by fewer than two dreams are flagged ``insufficient``; their
    p-value is still reported (it is 1.0 for a single dream).
    """
    traces = list(traces)
    if not traces:
        raise ParameterError("build_report needs at least one trace")
    rows = []
    for event in events:
        st = main_component_stats(traces, event)
        ev = [d.event_share for d in st.dreams]
        ov = [d.overall_share for d in st.dreams]
        insufficient = len(st.dreams) < 2
        u = p = None
        if st.dreams:
            u, p = mann_whitney_u(ev, ov)
        rows.append(AttributionRow(
            event=event,
            dreams=st.dreams,
            u=u,
            p=p,
            dream_count=len(st.dreams),
            event_frames=sum(d.event_frames for d in st.dreams),
            zero_event_dreams=st.zero_event_dreams,
            ties=sum(d.tie for d in st.dreams),
            insufficient=insufficient,
        ))
    meta = {
        "models": sorted({t.model_id for t in traces}),
        "dreams": len(traces),
        "steps": sorted({len(t) for t in traces}),
        "pi_temperatures": sorted({t.pi_temperature for t in traces}),
        "sigma_temperatures": sorted({t.sigma_temperature for t in traces}),
        "seeds": [int(t.seed) for t in traces],
    }
    meta.update(metadata or {})
    return AttributionReport(rows, meta)


def committed_event_counts(traces, events=TRACKED_EVENTS + ("fireball_present",)) -> dict[int, dict[str, int]]:
    """Total event frames per committed component (committed traces only)."""
    out: dict[int, dict[str, int]] = {}
    for tr in traces:
        if tr.committed is None:
            continue
        bucket = out.setdefault(int(tr.committed), {e: 0 for e in events})
        for e in events:
            bucket[e] += int(tr.flag(e).sum())
    return dict(sorted(out.items()))


def committed_summary(traces, events=TRACKED_EVENTS + ("fireball_present",)) -> dict:
    """Event counts per committed component and how often each trace used its committed component."""
    committed = [t for t in traces if t.committed is not None]
    counts = committed_event_counts(committed, events)
    usage = {}
    for tr in committed:
        usage.setdefault(str(tr.committed), []).append(float(np.mean(np.asarray(tr.sampled) == tr.committed)))
    return {
        "counts": {str(k): v for k, v in counts.items()},
        "dreams": {str(k): len(v) for k, v in sorted(usage.items())},
        "min_usage": {k: min(v) for k, v in sorted(usage.items())},
    }
