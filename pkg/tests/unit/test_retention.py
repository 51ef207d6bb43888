"""
Unit tests for retention policies (ensim/protocol/retention.py).
"""

import pytest

from ensim.protocol.retention import (
    RECEIVED_ID_RETENTION,
    RETENTION_DAYS,
    SENT_KEY_RETENTION,
    RetentionPolicy,
)


class TestRetentionPolicy:
    """Test age-based expiry."""

    def test_store_policies(self):
        """Test S keeps 14 daily keys and R drops records older than 14 days."""
        assert RETENTION_DAYS == 14
        assert SENT_KEY_RETENTION.max_age_days == 13
        assert RECEIVED_ID_RETENTION.max_age_days == 14

    @pytest.mark.parametrize("day,current_day,expired", [
        (0, 0, False),
        (0, 14, False),
        (0, 15, True),
        (10, 20, False),
        (5, 30, True),
    ])
    def test_received_record_expiry(self, day, current_day, expired):
        """Test R records expire once collected more than 14 days ago."""
        assert RECEIVED_ID_RETENTION.is_expired(day, current_day) is expired

    def test_sent_key_window(self):
        """Test S keeps exactly today plus the 13 previous days."""
        kept = [d for d in range(30) if not SENT_KEY_RETENTION.is_expired(d, 29)]

        assert kept == list(range(16, 30))
        assert len(kept) == 14

    def test_enforce_returns_expired(self):
        """Test enforce splits out only the expired items."""
        items = [('a', 0), ('b', 5), ('c', 10)]
        expired = RetentionPolicy(5).enforce(items, lambda item: item[1], 10)

        assert expired == [('a', 0)]

    def test_enforce_mapping_in_place(self):
        """Test day-keyed mappings are pruned in place."""
        mapping = {day: f'key-{day}' for day in range(20)}
        removed = SENT_KEY_RETENTION.enforce_mapping(mapping, 19)

        assert removed == 6
        assert sorted(mapping) == list(range(6, 20))
