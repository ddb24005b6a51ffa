"""Fast internal verification bundle behind the ``selftest`` CLI command.

Each check returns (name, passed, detail).  These cover the analytic
loss values, the optimizer recurrences, rank-based AUROC against the
exhaustive pairwise oracle, and a small float64 gradient check.
"""

import math

import numpy as np
import torch

from . import rng as rngmod
from .evaluation.metrics import auroc
from .training.gradcheck import standard_gradchecks
from .training.losses import bce_label
from .training.optim import adamw_update, sgd_momentum_update


def auroc_bruteforce(scores, labels):
    """O(P*N) pairwise oracle: 1 per correct order, 0.5 per tie."""
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[np.asarray(labels) == 1]
    neg = scores[np.asarray(labels) == 0]
    credit = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                credit += 1.0
            elif p == n:
                credit += 0.5
    return credit / (len(pos) * len(neg))


def check_loss_analytics():
    ln2 = math.log(2.0)
    cases = [
        abs(float(bce_label(torch.tensor(0.5), 0)) - ln2),
        abs(float(bce_label(torch.tensor(0.5), 1)) - ln2),
        abs(float(bce_label(torch.tensor(0.8), 1)) + math.log(0.8)),
    ]
    worst = max(cases)
    return ("loss-analytics", worst < 1e-9, f"max deviation {worst:.2e}")


def check_optimizer_rules():
    p = torch.tensor([1.0], dtype=torch.float64)
    v = torch.tensor([0.0], dtype=torch.float64)
    g = torch.tensor([1.0], dtype=torch.float64)
    for _ in range(2):
        p, v = sgd_momentum_update(p, g, v, 0.1, 0.9)
    expected = 1.0 - 0.1 * 1.0 - 0.1 * 1.9
    sgd_ok = float(p) == expected

    p = torch.tensor([0.0], dtype=torch.float64)
    g = torch.tensor([1.0], dtype=torch.float64)
    zero = torch.zeros(1, dtype=torch.float64)
    p2, _ = adamw_update(p, g, zero, zero, 0, 1e-4, (0.9, 0.999), 0.0)
    adam_expected = -1e-4 * (1.0 / (1.0 + 1e-8))
    adam_ok = abs(float(p2) - adam_expected) < 1e-10
    return (
        "optimizer-rules",
        sgd_ok and adam_ok,
        f"sgd={float(p.clone()) if not sgd_ok else 'ok'} adamw_err="
        f"{abs(float(p2) - adam_expected):.2e}",
    )


def check_auroc_oracle(n_sets=50, seed=0):
    s = rngmod.stream(seed, "selftest", "auroc")
    worst = 0.0
    for _ in range(n_sets):
        n = int(s.integers(2, 40))
        scores = np.round(s.normal(size=n), 1)  # rounding injects ties
        labels = s.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        worst = max(worst, abs(auroc(scores, labels) - auroc_bruteforce(scores, labels)))
    return ("auroc-oracle", worst < 1e-12, f"max deviation {worst:.2e}")


def check_gradients(seed=0):
    results = standard_gradchecks(dtype=torch.float64, seed=seed, n_coords=24)
    worst = max(err / tol for _, err, tol in results)
    detail = "; ".join(f"{name}={err:.2e}" for name, err, _ in results)
    return ("gradient-check", worst < 1.0, detail)


def run_selftest(seed=0):
    return [
        check_loss_analytics(),
        check_optimizer_rules(),
        check_auroc_oracle(seed=seed),
        check_gradients(seed=seed),
    ]
