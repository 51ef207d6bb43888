"""
Retention policy enforcement for the per-device stores.

Both stores are pruned at every day boundary:
- sent keys (S) keep the 14 most recent daily keys, today included
- received records (R) are removed once collected more than 14 days ago
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, TypeVar


RETENTION_DAYS = 14

T = TypeVar('T')


@dataclass(frozen=True)
class RetentionPolicy:
    """
    Age-based retention rule.

    An item collected on `day` is kept while `current_day - day <= max_age_days`.
    """

    max_age_days: int

    def is_expired(self, day: int, current_day: int) -> bool:
        return current_day - day > self.max_age_days

    def enforce(self, items: Iterable[T], day_of: Callable[[T], int], current_day: int) -> List[T]:
        """
        Split out expired items.

        Args:
            items: Stored items
            day_of: Accessor returning the collection day of an item
            current_day: Today's day index

        Returns:
            The expired items (callers drop them from their store)
        """
        return [item for item in items if self.is_expired(day_of(item), current_day)]

    def enforce_mapping(self, mapping: Dict[int, T], current_day: int) -> int:
        """
        Drop expired entries from a day-keyed mapping in place.

        Returns:
            Number of entries removed
        """
        expired = [day for day in mapping if self.is_expired(day, current_day)]
        for day in expired:
            del mapping[day]
        return len(expired)


SENT_KEY_RETENTION = RetentionPolicy(max_age_days=RETENTION_DAYS - 1)
RECEIVED_ID_RETENTION = RetentionPolicy(max_age_days=RETENTION_DAYS)
