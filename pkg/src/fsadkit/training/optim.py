"""Optimizer update rules and a minimal optimizer wrapper.

The update rules are written as explicit elementwise tensor expressions
(separate multiply and add) so a hand iteration of the recurrence in
float64 reproduces them bit for bit.
"""

from dataclasses import dataclass, field

import torch

from ..errors import ConfigError, ShapeError

ADAM_EPS = 1e-8


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd-momentum"
    learning_rate: float = 1e-4
    momentum: float = 0.9
    betas: tuple = (0.9, 0.999)
    weight_decay: float = 0.0

    def validate(self):
        if self.kind not in ("sgd-momentum", "adamw"):
            raise ConfigError(f"unknown optimizer kind {self.kind!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")
        if not all(0.0 <= b < 1.0 for b in self.betas):
            raise ConfigError("betas must each be in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigError("weight decay must be >= 0")
        if self.kind == "sgd-momentum" and self.weight_decay != 0.0:
            raise ConfigError("sgd-momentum does not apply weight decay; set it to 0")
        return self


def sgd_momentum_update(param, grad, velocity, lr, momentum):
    """v' = momentum*v + g;  p' = p - lr*v'."""
    if param.shape != grad.shape or param.shape != velocity.shape:
        raise ShapeError("parameter/gradient/velocity shapes differ")
    new_velocity = momentum * velocity + grad
    new_param = param - lr * new_velocity
    return new_param, new_velocity


def adamw_update(param, grad, m, v, t, lr, betas, weight_decay, eps=ADAM_EPS):
    """Decoupled-weight-decay Adam with bias correction; t is 0-based."""
    if param.shape != grad.shape or param.shape != m.shape or param.shape != v.shape:
        raise ShapeError("parameter/gradient/moment shapes differ")
    beta1, beta2 = betas
    t = t + 1
    new_m = beta1 * m + (1.0 - beta1) * grad
    new_v = beta2 * v + (1.0 - beta2) * (grad * grad)
    m_hat = new_m / (1.0 - beta1 ** t)
    v_hat = new_v / (1.0 - beta2 ** t)
    new_param = param - lr * (m_hat / (torch.sqrt(v_hat) + eps) + weight_decay * param)
    return new_param, (new_m, new_v, t)


@dataclass
class Optimizer:
    """Applies the configured rule to a fixed list of named parameters."""

    config: OptimizerConfig
    parameters: list                       # (name, torch.nn.Parameter)
    state: dict = field(default_factory=dict)

    def __post_init__(self):
        self.config.validate()

    def _state_for(self, name, param):
        if name not in self.state:
            if self.config.kind == "sgd-momentum":
                self.state[name] = {"velocity": torch.zeros_like(param)}
            else:
                self.state[name] = {
                    "m": torch.zeros_like(param),
                    "v": torch.zeros_like(param),
                    "t": 0,
                }
        return self.state[name]

    @torch.no_grad()
    def step(self):
        cfg = self.config
        for name, param in self.parameters:
            if param.grad is None:
                continue
            st = self._state_for(name, param)
            if cfg.kind == "sgd-momentum":
                new_param, new_velocity = sgd_momentum_update(
                    param, param.grad, st["velocity"], cfg.learning_rate, cfg.momentum
                )
                st["velocity"] = new_velocity
            else:
                new_param, (new_m, new_v, new_t) = adamw_update(
                    param,
                    param.grad,
                    st["m"],
                    st["v"],
                    st["t"],
                    cfg.learning_rate,
                    cfg.betas,
                    cfg.weight_decay,
                )
                st["m"], st["v"], st["t"] = new_m, new_v, new_t
            param.copy_(new_param)

    def zero_grad(self):
        for _, param in self.parameters:
            param.grad = None
