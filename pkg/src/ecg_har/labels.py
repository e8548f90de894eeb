"""Activity labels and their fixed integer codes."""
from enum import IntEnum


class ActivityLabel(IntEnum):
    """The six recognized activities, with stable codes 0-5."""

    SITTING = 0
    STANDING = 1
    WALKING = 2
    SKIPPING = 3
    RUNNING = 4
    CLIMBING_STAIRS = 5

    @classmethod
    def from_name(cls, name: str) -> "ActivityLabel":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown activity name: {name!r}") from None

    @property
    def label_name(self) -> str:
        return self.name.lower()


NUM_CLASSES = len(ActivityLabel)

LABEL_NAMES = [a.label_name for a in ActivityLabel]
