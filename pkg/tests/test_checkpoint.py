"""
Unit tests for model checkpoints
"""

import numpy as np
import pytest

from src.core.errors import FormatError
from src.core.interaction import AttentionMode, FusionMode, InteractionVariant
from src.infrastructure.checkpoint import (
    CHECKPOINT_DIR, decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint,
)
from src.models.params import DISC_TWO_D


class TestCheckpoint:
    """Test suite for save_checkpoint / load_checkpoint"""

    def test_model_restored(self, make_model, tmp_path):
        model = make_model(
            seed=5,
            variant=InteractionVariant.TWO_D_TO_THREE_D,
            fusion_mode=FusionMode.ADD,
            attention=AttentionMode.CONVENTIONAL,
        )
        model.trained_discriminators.add(DISC_TWO_D)
        path = save_checkpoint(model, tmp_path, "source")
        assert path == tmp_path / CHECKPOINT_DIR / "source.ckpt"

        restored = load_checkpoint(path)
        assert restored.settings() == model.settings()
        assert restored.trained_discriminators == {DISC_TWO_D}
        original = model.params.state_dict()
        for name, value in restored.params.state_dict().items():
            np.testing.assert_array_equal(value, original[name])

    def test_same_model_same_bytes(self, make_model):
        state = make_model(seed=1).params.state_dict()
        assert encode_checkpoint(state, "x", {"a": 1}) == encode_checkpoint(dict(reversed(state.items())), "x", {"a": 1})

    def test_stage_and_metadata(self):
        stage, meta, state = decode_checkpoint(encode_checkpoint({"w": np.ones((2, 3))}, "finetune", {"k": "v"}))
        assert stage == "finetune"
        assert meta == {"k": "v"}
        assert state["w"].shape == (2, 3)

    def test_truncated(self, make_model, tmp_path):
        path = save_checkpoint(make_model(), tmp_path, "source")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_missing_metadata(self, tmp_path):
        path = tmp_path / "bare.ckpt"
        path.write_bytes(encode_checkpoint({}, "source", {}))
        with pytest.raises(FormatError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError):
            load_checkpoint(tmp_path / "nope.ckpt")
