from .ars import ArsConfig, ArsTrainer, ars_update, sample_directions
from .normalizer import RunningNormalizer
from .ppo import PpoConfig, PpoTrainer, gae
from .rollout import RolloutRecord, RolloutTask, rollout

__all__ = [
    "ArsConfig",
    "ArsTrainer",
    "ars_update",
    "sample_directions",
    "RunningNormalizer",
    "PpoConfig",
    "PpoTrainer",
    "gae",
    "RolloutRecord",
    "RolloutTask",
    "rollout",
]
