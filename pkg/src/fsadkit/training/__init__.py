from .losses import PROB_EPS, adversarial_term, bce_label, discriminator_objective, model_objective
from .optim import ADAM_EPS, Optimizer, OptimizerConfig, adamw_update, sgd_momentum_update
from .trainer import (
    StepReport,
    TrainerConfig,
    TrainState,
    batches_per_epoch,
    discriminator_step,
    model_step,
    train_epoch,
    train_epoch_baseline,
)
from .gradcheck import finite_difference_gradcheck, standard_gradchecks, EPS_FD, TOLERANCE

__all__ = [
    "PROB_EPS",
    "adversarial_term",
    "bce_label",
    "discriminator_objective",
    "model_objective",
    "ADAM_EPS",
    "Optimizer",
    "OptimizerConfig",
    "adamw_update",
    "sgd_momentum_update",
    "StepReport",
    "TrainerConfig",
    "TrainState",
    "batches_per_epoch",
    "discriminator_step",
    "model_step",
    "train_epoch",
    "train_epoch_baseline",
    "finite_difference_gradcheck",
    "standard_gradchecks",
    "EPS_FD",
    "TOLERANCE",
]
