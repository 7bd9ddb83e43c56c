"""
Training history for UniDA3D

Per-iteration records kept by every training loop.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List


@dataclass
class TrainingHistory:
    """
    Loss curve of one training stage.

    Attributes:
        stage: stage name (source, finetune, self_train, discriminator)
        losses: total loss per iteration
        lrs: learning rate used per iteration
        metrics: extra per-iteration series (branch losses, accuracy)
    """
    stage: str
    losses: List[float] = field(default_factory=list)
    lrs: List[float] = field(default_factory=list)
    metrics: Dict[str, List[float]] = field(default_factory=dict)

    def record(self, loss: float, lr: float, **extra: float) -> None:
        self.losses.append(float(loss))
        self.lrs.append(float(lr))
        for key, value in extra.items():
            self.metrics.setdefault(key, []).append(float(value))

    def __len__(self) -> int:
        return len(self.losses)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "losses": self.losses,
            "lrs": self.lrs,
            "metrics": {k: self.metrics[k] for k in sorted(self.metrics)},
        }
