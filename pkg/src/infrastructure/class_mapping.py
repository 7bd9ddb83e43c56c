"""
Class-mapping loader for UniDA3D

Reads UTF-8 CSV files with the header "source_class,mapped_class".
"""

import csv
from pathlib import Path
from typing import List, Optional, Tuple, Union

from config import config
from src.core.errors import FormatError
from src.infrastructure.logger import get_logger, log_exception
from src.models.class_mapping import ClassMapping

logger = get_logger(__name__)

HEADER = ["source_class", "mapped_class"]


class ClassMappingLoader:
    """
    Loader for bundled and user-supplied class mappings.

    Relative names resolve against the bundled mapping directory; the
    ".csv" suffix may be omitted.
    """

    def __init__(self, mapping_dir: Optional[Path] = None):
        """
        Initialize class-mapping loader.

        Args:
            mapping_dir: Directory of mapping files (default: from config)
        """
        self.mapping_dir = mapping_dir or config.mapping_path

    def resolve(self, name: Union[str, Path]) -> Path:
        path = Path(name)
        if not path.is_absolute() and not path.exists():
            path = self.mapping_dir / path
        if path.suffix.lower() != ".csv":
            path = path.with_suffix(".csv")
        return path

    def available(self) -> List[str]:
        """Stems of the bundled mapping files"""
        return sorted(p.stem for p in self.mapping_dir.glob("*.csv"))

    @log_exception(logger)
    def load(self, name: Union[str, Path]) -> ClassMapping:
        """
        Load and validate one mapping file.

        Raises:
            FormatError: on a missing file, wrong header, malformed row,
                duplicate source name or unknown mapped name
        """
        path = self.resolve(name)
        if not path.exists():
            raise FormatError("class-mapping file not found", path)

        entries: List[Tuple[str, str]] = []
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != HEADER:
                raise FormatError(f"expected header {','.join(HEADER)}, got {header}", path)
            for line_no, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != 2:
                    raise FormatError(f"line {line_no}: expected 2 columns, got {len(row)}", path)
                entries.append((row[0].strip(), row[1].strip()))

        try:
            mapping = ClassMapping(entries, name=path.stem)
        except FormatError as exc:
            raise FormatError(str(exc), path) from exc
        logger.info(f"Loaded class mapping {path.name}: {len(mapping)} entries")
        return mapping


def load_class_mapping(path: Union[str, Path]) -> ClassMapping:
    return ClassMappingLoader().load(path)
