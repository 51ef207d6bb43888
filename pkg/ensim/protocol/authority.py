"""
Health-authority diagnosis key server.

Publishes one immutable batch per accepted upload and serves batches to
polling apps by cursor. The server only ever handles temporary exposure
keys; identifiers and received records never reach it. The central report
log exists for the re-centralizing attack: any entry in it is evidence that
match results left a device.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from .keyschedule import TemporaryExposureKey
from .riskscore import DailySummary, ReportType


logger = logging.getLogger(__name__)


class AuthorityError(Exception):
    """Raised when a request to the authority server is malformed."""
    pass


class UploadRejectedError(AuthorityError):
    """Raised when an upload cannot be published."""
    pass


class Provenance(str, Enum):
    """How the keys of a batch reached the server."""
    DIAGNOSIS = 'diagnosis'
    COERCED = 'coerced'
    BEACON = 'beacon'


@dataclass(frozen=True)
class DiagnosisKey:
    """A published key together with the report type of its diagnosis."""

    tek: TemporaryExposureKey
    report_type: str = ReportType.CONFIRMED_TEST.value

    def to_dict(self) -> Dict[str, Any]:
        return {'day': self.tek.day, 'key_hex': self.tek.hex(), 'report_type': self.report_type}


@dataclass(frozen=True)
class DiagnosisKeyBatch:
    """Immutable set of keys published by one upload."""

    batch_id: int
    keys: Tuple[DiagnosisKey, ...]
    published_at: int
    uploader: str
    provenance: str = Provenance.DIAGNOSIS.value

    def key_days(self) -> List[int]:
        return sorted({k.tek.day for k in self.keys})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'batch_id': self.batch_id,
            'published_at': self.published_at,
            'uploader': self.uploader,
            'provenance': self.provenance,
            'keys': [k.to_dict() for k in self.keys],
        }


@dataclass(frozen=True)
class CentralReportEntry:
    """Match result an app sent back together with a user identifier."""

    user_identifier: str
    day: int
    total_risk: float
    reported_at: int
    batch_ids: Tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'user_identifier': self.user_identifier,
            'day': self.day,
            'total_risk': self.total_risk,
            'reported_at': self.reported_at,
            'batch_ids': list(self.batch_ids),
        }


class DiagnosisKeyServer:
    """
    In-process health-authority server driven by the event loop.
    """

    def __init__(self):
        self._batches: List[DiagnosisKeyBatch] = []
        self._central_reports: List[CentralReportEntry] = []

    @property
    def batches(self) -> Tuple[DiagnosisKeyBatch, ...]:
        return tuple(self._batches)

    @property
    def central_reports(self) -> Tuple[CentralReportEntry, ...]:
        return tuple(self._central_reports)

    @property
    def last_batch_id(self) -> int:
        return self._batches[-1].batch_id if self._batches else 0

    def upload_keys(
        self,
        keys: Sequence[TemporaryExposureKey],
        report_type: str,
        time: int,
        uploader: str,
        provenance: str = Provenance.DIAGNOSIS.value
    ) -> int:
        """
        Publish uploaded keys as a new batch.

        Args:
            keys: Temporary exposure keys of the diagnosed device
            report_type: How the diagnosis was established
            time: Simulation minute of publication
            uploader: Who the authority diagnosed (device or beacon id)
            provenance: 'diagnosis', 'coerced' or 'beacon'

        Returns:
            batch_id of the new batch (1, 2, ...)

        Raises:
            UploadRejectedError: If keys is empty or contains anything but TEKs
        """
        keys = list(keys)
        if not keys:
            raise UploadRejectedError(f"Upload from {uploader} contains no keys")
        for key in keys:
            if not isinstance(key, TemporaryExposureKey):
                raise UploadRejectedError(
                    f"Upload from {uploader} contains a {type(key).__name__}; only temporary exposure keys are accepted"
                )
        try:
            report_type = ReportType(report_type).value
            provenance = Provenance(provenance).value
        except ValueError as e:
            raise UploadRejectedError(f"Upload from {uploader} rejected: {e}")

        batch = DiagnosisKeyBatch(
            batch_id=self.last_batch_id + 1,
            keys=tuple(DiagnosisKey(tek, report_type) for tek in keys),
            published_at=time,
            uploader=uploader,
            provenance=provenance,
        )
        self._batches.append(batch)
        logger.info(f"Published batch {batch.batch_id}: {len(keys)} keys from {uploader} ({provenance})")
        return batch.batch_id

    def download_since(self, last_seen_batch_id: int) -> List[DiagnosisKeyBatch]:
        """All batches with id > last_seen_batch_id, in publication order."""
        return [b for b in self._batches if b.batch_id > last_seen_batch_id]

    def record_central_report(
        self,
        user_identifier: str,
        summaries: Iterable[DailySummary],
        time: int,
        batch_ids: Iterable[int] = ()
    ) -> List[CentralReportEntry]:
        """
        Append match results reported by an app, one entry per summary.

        Returns:
            The entries appended
        """
        batch_ids = tuple(batch_ids)
        entries = [
            CentralReportEntry(user_identifier, s.day, s.total_risk, time, batch_ids)
            for s in summaries
        ]
        self._central_reports.extend(entries)
        if entries:
            logger.warning(f"Central report from {user_identifier}: {len(entries)} days")
        return entries

    def batch(self, batch_id: int) -> Optional[DiagnosisKeyBatch]:
        if 1 <= batch_id <= len(self._batches):
            return self._batches[batch_id - 1]
        return None

    def dump(self) -> Dict[str, Any]:
        return {
            'batches': [b.to_dict() for b in self._batches],
            'central_reports': [e.to_dict() for e in self._central_reports],
        }
