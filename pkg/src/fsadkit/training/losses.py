"""Adversarial loss terms.

The discriminator is trained to put f0 in class 0 and f1 in class 1; the
main model in turn adds a label-flipped term that pushes D(f0) toward
class 1.  Probabilities are clamped to [eps, 1-eps] so saturated outputs
keep the loss finite.
"""

import torch

from ..errors import NumericalError

PROB_EPS = 1e-7


def bce_label(p, y):
    """Binary cross-entropy of probability ``p`` against hard label ``y``."""
    p = torch.clamp(torch.as_tensor(p), PROB_EPS, 1.0 - PROB_EPS)
    if y == 1:
        return (-torch.log(p)).mean()
    return (-torch.log(1.0 - p)).mean()


def discriminator_objective(disc, pair):
    """Total discriminator loss: classify f0 as 0 and f1 as 1.

    Both feature maps are detached, so only the discriminator's
    parameters see a gradient.
    """
    pair.check()
    f0 = pair.f0.detach()
    f1 = pair.f1.detach()
    return bce_label(disc(f0), 0) + bce_label(disc(f1), 1)


def adversarial_term(disc, pair, symmetric=False):
    """The fooling term added to the main-model loss.

    As written in the training objective only f0 is pushed toward class 1;
    ``symmetric`` additionally pushes f1 toward class 0 (ablation flag).
    Gradients flow through the discriminator into the features, not into
    the discriminator's own parameters (the caller freezes them).
    """
    term = bce_label(disc(pair.f0), 1)
    if symmetric:
        term = term + bce_label(disc(pair.f1), 0)
    return term


def model_objective(loss_model, disc, f0):
    """Total main-model loss: L_M plus the fooling term on f0."""
    if not torch.isfinite(torch.as_tensor(loss_model)).all():
        raise NumericalError("non-finite model loss")
    return loss_model + bce_label(disc(f0), 1)
