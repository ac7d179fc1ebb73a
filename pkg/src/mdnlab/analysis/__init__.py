"""Event detection, main-component attribution and significance testing."""
from .attribution import (AttributionReport, AttributionRow, DreamShare, EventStats, build_report, committed_summary,
                          committed_event_counts, main_component_stats)
from .events import (DEFAULT_THRESHOLDS, FLAG_NAMES, TRACKED_EVENTS, DetectorThresholds, EventFlags,
                     agreement_rates, detect_events, detect_sequence)
from .stats import MannWhitneyResult, mann_whitney_u, midranks

__all__ = [
    "AttributionReport", "AttributionRow", "DEFAULT_THRESHOLDS", "DetectorThresholds", "DreamShare",
    "EventFlags", "EventStats", "FLAG_NAMES", "MannWhitneyResult", "TRACKED_EVENTS", "build_report",
    "agreement_rates", "committed_event_counts", "committed_summary", "detect_events", "detect_sequence", "main_component_stats",
    "mann_whitney_u", "midranks",
]
