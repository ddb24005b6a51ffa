"""Alternating two-phase training.

Per batch the main model is updated first on L_MT = L_M + L_adv, then the
discriminator on L_DT computed from the detached feature pair of that
same forward pass.  The two steps are strictly isolated: the model step
freezes the discriminator's parameters (they receive neither gradients
nor updates), and the discriminator step sees only detached features.

``train_epoch_baseline`` is the discriminator-free reference trainer used
to verify that switching the adversarial flag off reproduces its
parameter trajectory bit for bit.
"""

import math
import time
from dataclasses import dataclass, field

import torch

from .. import rng as rngmod
from ..data.episode import sample_image_batch, sample_pair_batch
from ..errors import ConfigError, NumericalError
from ..models.recon import reconstruction_loss
from ..models.siamese import FeaturePair, registration_loss
from .losses import adversarial_term, discriminator_objective
from .optim import Optimizer

HOSTS = ("siamese", "masked-recon")


@dataclass
class StepReport:
    loss_model: float
    loss_adv: float
    loss_model_total: float
    grad_norm_model: float
    update_norm_model: float
    loss_disc: float | None = None
    grad_norm_disc: float | None = None
    update_norm_disc: float | None = None


@dataclass
class TrainerConfig:
    batch_size: int = 8
    pairs_per_epoch: int = 128
    adversarial: bool = True
    symmetric_adversarial: bool = False
    disc_steps: int = 1
    grad_clip: float | None = None


@dataclass
class TrainState:
    """Single-writer training state for one (run, episode) cell."""

    host: str
    model: torch.nn.Module
    opt_model: Optimizer
    disc: torch.nn.Module | None
    opt_disc: Optimizer | None
    sample_rng: object
    mask_rng: object
    epoch: int = 0
    update_log: list = field(default_factory=list)

    @classmethod
    def create(cls, host, model, disc, model_opt_config, disc_opt_config, seed):
        if host not in HOSTS:
            raise ConfigError(f"unknown host {host!r}")
        trainable = [
            (n, p) for n, p in model.named_parameters() if p.requires_grad
        ]
        opt_model = Optimizer(model_opt_config, trainable)
        opt_disc = None
        if disc is not None:
            opt_disc = Optimizer(disc_opt_config, list(disc.named_parameters()))
        return cls(
            host=host,
            model=model,
            opt_model=opt_model,
            disc=disc,
            opt_disc=opt_disc,
            sample_rng=rngmod.stream(seed, "train", "batches"),
            mask_rng=rngmod.stream(seed, "train", "mask"),
        )


def _flat_params(pairs):
    return torch.cat([p.detach().reshape(-1).clone() for _, p in pairs])


def _grad_norm(pairs):
    total = 0.0
    for _, p in pairs:
        if p.grad is not None:
            total += float((p.grad.detach() ** 2).sum())
    return math.sqrt(total)


def _clip_grads(pairs, max_norm):
    norm = _grad_norm(pairs)
    if norm > max_norm > 0:
        scale = max_norm / (norm + 1e-12)
        for _, p in pairs:
            if p.grad is not None:
                p.grad.mul_(scale)


def _forward_model(state, batch):
    """Host-specific forward pass: returns (L_M tensor, FeaturePair)."""
    if state.host == "siamese":
        i0, i1 = batch
        out = state.model(i0, i1)
        return registration_loss(out), out.pair
    out = state.model(batch, rng=state.mask_rng)
    return reconstruction_loss(out.z.detach(), out.z_hat), out.pair


def model_step(state, batch, config):
    """Update the main model on L_MT; the discriminator stays untouched."""
    state.opt_model.zero_grad()
    disc_params = list(state.disc.parameters()) if state.disc is not None else []
    loss_model, pair = _forward_model(state, batch)

    if config.adversarial:
        if state.disc is None:
            raise ConfigError("adversarial training requested without a discriminator")
        for p in disc_params:
            p.requires_grad_(False)
        loss_adv = adversarial_term(state.disc, pair, config.symmetric_adversarial)
        loss_total = loss_model + loss_adv
    else:
        loss_adv = None
        loss_total = loss_model

    if not torch.isfinite(loss_total):
        raise NumericalError(
            f"non-finite training loss at epoch {state.epoch}: "
            f"L_M={loss_model.item()!r}"
        )
    loss_total.backward()
    for p in disc_params:
        p.requires_grad_(True)

    if config.grad_clip is not None:
        _clip_grads(state.opt_model.parameters, config.grad_clip)
    grad_norm = _grad_norm(state.opt_model.parameters)
    if not math.isfinite(grad_norm):
        raise NumericalError(f"non-finite model gradient at epoch {state.epoch}")
    before = _flat_params(state.opt_model.parameters)
    state.opt_model.step()
    update_norm = float((_flat_params(state.opt_model.parameters) - before).norm())
    state.update_log.append("M")

    report = StepReport(
        loss_model=loss_model.item(),
        loss_adv=loss_adv.item() if loss_adv is not None else 0.0,
        loss_model_total=loss_total.item(),
        grad_norm_model=grad_norm,
        update_norm_model=update_norm,
    )
    detached = FeaturePair(pair.f0.detach(), pair.f1.detach())
    return report, detached


def discriminator_step(state, pair, config):
    """Update the discriminator on L_DT; the main model stays untouched."""
    if state.disc is None or state.opt_disc is None:
        raise ConfigError("no discriminator in this train state")
    state.opt_disc.zero_grad()
    loss_disc = discriminator_objective(state.disc, pair)
    if not torch.isfinite(loss_disc):
        raise NumericalError(f"non-finite discriminator loss at epoch {state.epoch}")
    loss_disc.backward()
    if config.grad_clip is not None:
        _clip_grads(state.opt_disc.parameters, config.grad_clip)
    grad_norm = _grad_norm(state.opt_disc.parameters)
    before = _flat_params(state.opt_disc.parameters)
    state.opt_disc.step()
    update_norm = float((_flat_params(state.opt_disc.parameters) - before).norm())
    state.update_log.append("D")
    return loss_disc.item(), grad_norm, update_norm


def _sample_batch(state, episode, config):
    if state.host == "siamese":
        i0, i1 = sample_pair_batch(
            episode.train_pool, state.sample_rng, config.batch_size
        )
        return torch.from_numpy(i0), torch.from_numpy(i1)
    images = sample_image_batch(
        episode.train_pool, state.sample_rng, config.batch_size
    )
    return torch.from_numpy(images)

def batches_per_epoch(config):
    return math.ceil(config.pairs_per_epoch / config.batch_size)


def _mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def train_epoch(state, episode, config):
    """One epoch of alternating updates; returns averaged step metrics."""
    start = time.perf_counter()
    reports = []
    for _ in range(batches_per_epoch(config)):
        batch = _sample_batch(state, episode, config)
        report, pair = model_step(state, batch, config)
        if config.adversarial:
            for _ in range(config.disc_steps):
                loss_disc, gnorm, unorm = discriminator_step(state, pair, config)
            report.loss_disc = loss_disc
            report.grad_norm_disc = gnorm
            report.update_norm_disc = unorm
        reports.append(report)
    state.epoch += 1
    return {
        "epoch": state.epoch,
        "loss_model": _mean([r.loss_model for r in reports]),
        "loss_adv": _mean([r.loss_adv for r in reports]),
        "loss_model_total": _mean([r.loss_model_total for r in reports]),
        "loss_disc": _mean([r.loss_disc for r in reports]),
        "grad_norm_model": _mean([r.grad_norm_model for r in reports]),
        "grad_norm_disc": _mean([r.grad_norm_disc for r in reports]),
        "update_norm_model": _mean([r.update_norm_model for r in reports]),
        "update_norm_disc": _mean([r.update_norm_disc for r in reports]),
        "wall_time": time.perf_counter() - start,
    }


def train_epoch_baseline(state, episode, config):
    """Reference epoch with no adversarial code path at all."""
    start = time.perf_counter()
    reports = []
    for _ in range(batches_per_epoch(config)):
        batch = _sample_batch(state, episode, config)
        state.opt_model.zero_grad()
        loss_model, _ = _forward_model(state, batch)
        if not torch.isfinite(loss_model):
            raise NumericalError(f"non-finite training loss at epoch {state.epoch}")
        loss_model.backward()
        if config.grad_clip is not None:
            _clip_grads(state.opt_model.parameters, config.grad_clip)
        grad_norm = _grad_norm(state.opt_model.parameters)
        before = _flat_params(state.opt_model.parameters)
        state.opt_model.step()
        update_norm = float((_flat_params(state.opt_model.parameters) - before).norm())
        reports.append(
            StepReport(
                loss_model=loss_model.item(),
                loss_adv=0.0,
                loss_model_total=loss_model.item(),
                grad_norm_model=grad_norm,
                update_norm_model=update_norm,
            )
        )
    state.epoch += 1
    return {
        "epoch": state.epoch,
        "loss_model": _mean([r.loss_model for r in reports]),
        "loss_adv": 0.0,
        "loss_model_total": _mean([r.loss_model_total for r in reports]),
        "loss_disc": None,
        "grad_norm_model": _mean([r.grad_norm_model for r in reports]),
        "grad_norm_disc": None,
        "update_norm_model": _mean([r.update_norm_model for r in reports]),
        "update_norm_disc": None,
        "wall_time": time.perf_counter() - start,
    }
