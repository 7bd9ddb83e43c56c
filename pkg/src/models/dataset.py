"""
Dataset models for UniDA3D

A manifest lists the frames of one domain with their split, plus the
generator provenance. Oracle metadata (which source frames were drawn from
the target distribution) lives in its own section and is only read by tests.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional

from src.core.errors import ArgumentError, FormatError
from src.models.frame import Domain, Frame

SPLIT_TRAIN = "train"
SPLIT_TEST = "test"
SPLITS = (SPLIT_TRAIN, SPLIT_TEST)


@dataclass
class FrameEntry:
    """One manifest row"""
    id: int
    split: str = SPLIT_TRAIN
    file: str = ""
    sha256: str = ""

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ArgumentError(f"unknown split {self.split!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "split": self.split, "file": self.file, "sha256": self.sha256}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "FrameEntry":
        return cls(
            id=int(data["id"]),
            split=data["split"],
            file=data.get("file", ""),
            sha256=data.get("sha256", ""),
        )


@dataclass
class DatasetManifest:
    """
    Frame list of one domain.

    Attributes:
        domain: domain tag
        entries: frame rows in id order
        spec_hash: hash of the generator spec(s)
        seed: generator master seed
        oracle: hidden metadata, e.g. {"target_like": [ids]}
        version: manifest format version
    """
    domain: Domain
    entries: List[FrameEntry] = field(default_factory=list)
    spec_hash: str = ""
    seed: int = 0
    oracle: Dict[str, List[int]] = field(default_factory=dict)
    version: int = 1

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise FormatError("frame ids must be unique within a manifest")

    def ids(self, split: Optional[str] = None) -> List[int]:
        return [e.id for e in self.entries if split is None or e.split == split]

    def entry(self, frame_id: int) -> FrameEntry:
        for e in self.entries:
            if e.id == frame_id:
                return e
        raise KeyError(frame_id)

    @property
    def target_like_ids(self) -> List[int]:
        return list(self.oracle.get("target_like", []))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary (without the manifest hash)"""
        return {
            "version": self.version,
            "domain": self.domain.value,
            "seed": self.seed,
            "spec_hash": self.spec_hash,
            "frames": [e.to_dict() for e in self.entries],
            "oracle": {k: list(v) for k, v in sorted(self.oracle.items())},
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetManifest":
        """Create from dictionary"""
        return cls(
            domain=Domain.from_string(data["domain"]),
            entries=[FrameEntry.from_dict(e) for e in data["frames"]],
            spec_hash=data.get("spec_hash", ""),
            seed=int(data.get("seed", 0)),
            oracle={k: [int(i) for i in v] for k, v in data.get("oracle", {}).items()},
            version=int(data.get("version", 1)),
        )


@dataclass
class Dataset:
    """Manifest plus the frames it lists, keyed by id"""
    manifest: DatasetManifest
    frames: Dict[int, Frame] = field(default_factory=dict)

    def __post_init__(self):
        listed = set(self.manifest.ids())
        if set(self.frames) != listed:
            raise FormatError("dataset frames do not match the manifest entries")

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        for frame_id in self.manifest.ids():
            yield self.frames[frame_id]

    def split(self, name: str) -> List[Frame]:
        """Frames of one split in manifest order"""
        return [self.frames[i] for i in self.manifest.ids(name)]

    def subset(self, ids: List[int]) -> List[Frame]:
        """
        Frames with the given ids, in the given order.

        Raises:
            ArgumentError: if an id is not in the dataset
        """
        missing = [i for i in ids if i not in self.frames]
        if missing:
            raise ArgumentError(f"frame ids not in dataset: {missing}")
        return [self.frames[i] for i in ids]
