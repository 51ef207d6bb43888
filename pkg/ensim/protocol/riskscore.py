"""
Risk scoring for matched exposure.

A window's risk is

    duration_minutes * bucket_weight(min_attenuation_db) * report_type_weight(report_type)

Windows are at most 30 minutes long; daily summaries add up the risk of every
window on the same day.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Protocol, Sequence, Tuple

from .radio import DEFAULT_SCAN_PERIOD_MINUTES


MAX_WINDOW_MINUTES = 30.0


class RiskScoreError(Exception):
    """Raised when a scoring contract is violated."""
    pass


class RiskConfigError(RiskScoreError):
    """Raised when the risk configuration is invalid or incomplete."""
    pass


class ReportType(str, Enum):
    """How the diagnosis behind a key was established."""
    CONFIRMED_TEST = 'confirmed-test'
    CLINICAL_DIAGNOSIS = 'clinical-diagnosis'
    SELF_REPORT = 'self-report'


def _default_report_type_weights() -> Dict[str, float]:
    return {
        ReportType.CONFIRMED_TEST.value: 1.0,
        ReportType.CLINICAL_DIAGNOSIS.value: 1.0,
        ReportType.SELF_REPORT.value: 0.5,
    }


@dataclass(frozen=True)
class RiskConfig:
    """Developer-tunable weights of the scoring formula."""

    attenuation_buckets: Tuple[float, float, float] = (50.0, 55.0, 70.0)
    bucket_weights: Tuple[float, float, float, float] = (2.0, 1.0, 0.5, 0.0)
    report_type_weights: Mapping[str, float] = field(default_factory=_default_report_type_weights)
    notification_threshold: float = 15.0

    def __post_init__(self):
        thresholds = tuple(self.attenuation_buckets)
        weights = tuple(self.bucket_weights)
        if len(thresholds) != 3:
            raise RiskConfigError(f"attenuation_buckets needs 3 thresholds, got {len(thresholds)}")
        if any(lo >= hi for lo, hi in zip(thresholds, thresholds[1:])):
            raise RiskConfigError(f"attenuation_buckets must be strictly increasing: {thresholds}")
        if len(weights) != 4:
            raise RiskConfigError(f"bucket_weights needs 4 values, got {len(weights)}")
        if any(w < 0 for w in weights):
            raise RiskConfigError(f"bucket_weights must be >= 0: {weights}")
        if any(w < 0 for w in self.report_type_weights.values()):
            raise RiskConfigError("report_type_weights must be >= 0")
        if self.notification_threshold < 0:
            raise RiskConfigError("notification_threshold must be >= 0")
        # normalize sequences so equal configs compare equal
        object.__setattr__(self, 'attenuation_buckets', tuple(float(t) for t in thresholds))
        object.__setattr__(self, 'bucket_weights', tuple(float(w) for w in weights))
        object.__setattr__(self, 'report_type_weights', dict(self.report_type_weights))

    def bucket_of(self, attenuation_db: float) -> int:
        """Number of thresholds strictly below the attenuation."""
        return sum(1 for threshold in self.attenuation_buckets if attenuation_db > threshold)

    def report_weight(self, report_type) -> float:
        key = report_type.value if isinstance(report_type, ReportType) else report_type
        try:
            return self.report_type_weights[key]
        except KeyError:
            raise RiskConfigError(f"Unknown report type: {key}")


@dataclass(frozen=True)
class ExposureWindow:
    """A scored slice of matched exposure. Carries no key or identifier."""

    day: int
    duration_minutes: float
    bucket: int
    risk: float


@dataclass(frozen=True)
class DailySummary:
    day: int
    total_risk: float


class MatchedRecord(Protocol):
    """What scoring needs from a matched received record."""
    day: int
    exposure_minutes: float
    min_attenuation_db: float
    first_seen_minute: int
    last_seen_minute: int


def score_window(duration_minutes: float, min_attenuation_db: float, report_type, cfg: RiskConfig) -> float:
    """
    Score one exposure window.

    Raises:
        RiskScoreError: If duration is not positive
        RiskConfigError: If report_type has no configured weight
    """
    if duration_minutes <= 0:
        raise RiskScoreError(f"duration_minutes must be positive, got {duration_minutes}")

    report_weight = cfg.report_weight(report_type)
    bucket_weight = cfg.bucket_weights[cfg.bucket_of(min_attenuation_db)]
    return duration_minutes * bucket_weight * report_weight


def windows_from_match(
    records: Iterable[MatchedRecord],
    cfg: RiskConfig,
    report_type=ReportType.CONFIRMED_TEST,
    scan_period_minutes: int = DEFAULT_SCAN_PERIOD_MINUTES
) -> List[ExposureWindow]:
    """
    Turn the records matched by one diagnosis key into scored windows.

    Consecutive records (gap of at most one scan period) in the same
    attenuation bucket form a contiguous run; each run is cut into windows of
    at most 30 minutes.

    Args:
        records: Matched records, all from one key's day
        cfg: Risk configuration
        report_type: Report type attached to the diagnosis key
        scan_period_minutes: Scan period used to detect gaps

    Returns:
        List of ExposureWindow ordered by time
    """
    ordered = sorted(records, key=lambda r: (r.first_seen_minute, r.last_seen_minute))
    if not ordered:
        return []

    runs: List[Tuple[int, float, float]] = []  # (day, minutes, min attenuation)
    run_day = ordered[0].day
    run_minutes = 0.0
    run_min_att = ordered[0].min_attenuation_db
    run_bucket = cfg.bucket_of(run_min_att)
    last_seen = None

    for record in ordered:
        bucket = cfg.bucket_of(record.min_attenuation_db)
        contiguous = (
            last_seen is not None
            and record.day == run_day
            and bucket == run_bucket
            and record.first_seen_minute - last_seen <= scan_period_minutes
        )
        if last_seen is not None and not contiguous:
            runs.append((run_day, run_minutes, run_min_att))
            run_day, run_minutes = record.day, 0.0
            run_min_att, run_bucket = record.min_attenuation_db, bucket
        run_minutes += record.exposure_minutes
        run_min_att = min(run_min_att, record.min_attenuation_db)
        last_seen = record.last_seen_minute
    runs.append((run_day, run_minutes, run_min_att))

    windows = []
    for day, minutes, min_att in runs:
        remaining = minutes
        while remaining > 0:
            duration = min(MAX_WINDOW_MINUTES, remaining)
            windows.append(ExposureWindow(
                day=day,
                duration_minutes=duration,
                bucket=cfg.bucket_of(min_att),
                risk=score_window(duration, min_att, report_type, cfg),
            ))
            remaining -= duration
    return windows


def summarize(windows: Sequence[ExposureWindow]) -> List[DailySummary]:
    """Group windows by day and add up their risk, ordered by day."""
    totals: Dict[int, float] = defaultdict(float)
    for window in windows:
        totals[window.day] += window.risk
    return [DailySummary(day=day, total_risk=totals[day]) for day in sorted(totals)]
