"""
Class mapping model for UniDA3D

Maps dataset-specific class names onto the shared label set used when
adapting between two datasets.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Sequence, Tuple

import numpy as np

from config import config
from src.core.errors import ArgumentError, FormatError

IGNORE = "ignore"

# Closed set of mapped names
MAPPED_CLASSES: FrozenSet[str] = frozenset({
    "car", "bike", "person", "truck", "road", "parking", "sidewalk",
    "building", "nature", "other-objects", IGNORE,
})


@dataclass
class ClassMapping:
    """
    Ordered source-name → mapped-name entries.

    Attributes:
        entries: (source class, mapped class) in file order
        name: mapping identifier (usually the file stem)
    """
    entries: List[Tuple[str, str]]
    name: str = ""
    _lookup: Dict[str, str] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        """Validate entries after initialization"""
        for source, mapped in self.entries:
            if source in self._lookup:
                raise FormatError(f"duplicate source class {source!r}", self.name or None)
            if mapped not in MAPPED_CLASSES:
                raise FormatError(f"unknown mapped class {mapped!r} for {source!r}", self.name or None)
            self._lookup[source] = mapped

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, source: str) -> bool:
        return source in self._lookup

    def map(self, source: str) -> str:
        """
        Mapped name of one class. Names already in the mapped set pass
        through unchanged.

        Raises:
            ArgumentError: for a name neither in the mapping nor in the mapped set
        """
        if source in self._lookup:
            return self._lookup[source]
        if source in MAPPED_CLASSES:
            return source
        raise ArgumentError(f"class {source!r} is not covered by mapping {self.name!r}")


def apply_mapping(labels: Sequence[str], mapping: ClassMapping) -> List[str]:
    """Rewrite every label name to its mapped class or ignore"""
    return [mapping.map(label) for label in labels]


def to_label_ids(names: Sequence[str], classes: Sequence[str]) -> np.ndarray:
    """
    Integer ids of mapped names given an ordered class list; ignore becomes
    the ignore sentinel.

    Raises:
        ArgumentError: for a name not in the class list
    """
    index = {name: i for i, name in enumerate(classes)}
    ids = np.empty(len(names), dtype=np.int32)
    for i, name in enumerate(names):
        if name == IGNORE:
            ids[i] = config.IGNORE_LABEL
        elif name in index:
            ids[i] = index[name]
        else:
            raise ArgumentError(f"class {name!r} is not in the class list")
    return ids
