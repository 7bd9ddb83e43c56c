"""
Unit tests for dataset persistence

Tests the on-disk dataset format including:
- Save / load of every frame field
- Truncated and corrupted frame files
- Manifest and frame hash checks
"""

import json

import numpy as np
import pytest

from src.core.errors import FormatError, IntegrityError
from src.infrastructure.dataset_store import (
    MANIFEST_FILE, decode_frame, encode_frame, load_dataset, save_dataset,
)


class TestFrameCodec:
    """Test suite for encode_frame / decode_frame"""

    @pytest.fixture
    def frame(self, tiny_pair):
        return tiny_pair[1].frames[7]

    def test_fields_survive(self, frame):
        decoded = decode_frame(encode_frame(frame))
        assert decoded.id == frame.id
        assert decoded.domain is frame.domain
        np.testing.assert_array_equal(decoded.image, frame.image)
        np.testing.assert_array_equal(decoded.points, frame.points)
        np.testing.assert_array_equal(decoded.labels, frame.labels)
        np.testing.assert_array_equal(decoded.flags, frame.flags)
        np.testing.assert_array_equal(decoded.calibration.to_array(), frame.calibration.to_array())

    def test_truncated(self, frame):
        data = encode_frame(frame)
        with pytest.raises(FormatError):
            decode_frame(data[:-1])

    def test_trailing_bytes(self, frame):
        with pytest.raises(FormatError):
            decode_frame(encode_frame(frame) + b"\x00")

    def test_bad_magic(self, frame):
        with pytest.raises(FormatError):
            decode_frame(b"XXXX" + encode_frame(frame)[4:])


class TestDatasetDirectory:
    """Test suite for save_dataset / load_dataset"""

    def test_round_trip(self, tiny_pair, tmp_path):
        source = tiny_pair[0]
        save_dataset(source, tmp_path)
        loaded = load_dataset(tmp_path)
        assert loaded.manifest.ids() == source.manifest.ids()
        assert loaded.manifest.target_like_ids == source.manifest.target_like_ids
        for frame in source:
            np.testing.assert_array_equal(loaded.frames[frame.id].points, frame.points)

    def test_save_leaves_manifest_untouched(self, tiny_pair, tmp_path):
        source = tiny_pair[0]
        before = [e.to_dict() for e in source.manifest.entries]
        save_dataset(source, tmp_path)
        assert [e.to_dict() for e in source.manifest.entries] == before
        stored = load_dataset(tmp_path).manifest.entries
        assert all(e.file and e.sha256 for e in stored)

    def test_edited_manifest(self, tiny_pair, tmp_path):
        manifest = save_dataset(tiny_pair[1], tmp_path)
        body = json.loads(manifest.read_text(encoding="utf-8"))
        body["seed"] += 1
        manifest.write_text(json.dumps(body), encoding="utf-8")
        with pytest.raises(IntegrityError):
            load_dataset(tmp_path)

    def test_edited_frame_file(self, tiny_pair, tmp_path):
        save_dataset(tiny_pair[1], tmp_path)
        path = next((tmp_path / "frames").glob("*.bin"))
        data = bytearray(path.read_bytes())
        data[-1] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(IntegrityError):
            load_dataset(tmp_path)

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FormatError):
            load_dataset(tmp_path)

    def test_manifest_not_json(self, tmp_path):
        (tmp_path / MANIFEST_FILE).write_text("{not json", encoding="utf-8")
        with pytest.raises(FormatError):
            load_dataset(tmp_path)
