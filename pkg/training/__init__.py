# Optimizer, losses and training loops
from training.adam import AdamState, adam_step
from training.losses import mse_loss, nll_loss
from training.trainer import TrainConfig, forecast, train_feedforward, train_recurrent

__all__ = [
    "AdamState", "adam_step", "mse_loss", "nll_loss",
    "TrainConfig", "forecast", "train_feedforward", "train_recurrent",
]
