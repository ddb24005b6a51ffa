"""Finite-difference verification of the analytic gradients.

Central differences (f(t+e) - f(t-e)) / 2e are taken along a sampled
subset of parameter coordinates and compared with autograd.  Deviations
are reported relative to the largest analytic gradient entry, so the
statistic reads "wrongness as a fraction of the gradient's scale".

Losses with stop-gradient targets are checked against closures whose
targets are captured once as constants; that closure is exactly the
function whose full derivative the trainer's partial gradient is.

At 32-bit the difference quotient itself would drown in evaluation
round-off, so the oracle evaluates a float64 twin holding the identical
(float32-representable) parameter values; the comparison then measures
the 32-bit gradient's own error against the true derivative.
"""

import copy

import numpy as np
import torch
from scipy.ndimage import gaussian_filter

from .. import rng as rngmod
from ..errors import OracleError
from ..models.discriminator import Discriminator
from ..models.recon import MaskedReconModel
from ..models.siamese import SiameseModel, COSINE_EPS
from .losses import bce_label

EPS_FD = 1e-6
TOLERANCE = {torch.float32: 1e-3, torch.float64: 1e-5}


def finite_difference_gradcheck(
    objective,
    params,
    eps_fd=EPS_FD,
    n_coords=64,
    rng=None,
    corrupt_offset=0.0,
    grad_objective=None,
    grad_params=None,
):
    """Max relative deviation between analytic and central-difference grads.

    ``objective`` must be a deterministic zero-argument callable returning
    a scalar tensor depending on ``params``; differences are evaluated on
    it while the analytic gradient comes from ``grad_objective`` /
    ``grad_params`` (default: the same objective).  ``corrupt_offset`` is
    a fault-injection hook: a nonzero value shifts every analytic entry by
    that fraction of the gradient scale so callers can verify the check
    actually fails on wrong gradients.
    """
    rng = rng or rngmod.stream(0, "gradcheck", "coords")
    grad_objective = grad_objective or objective
    grad_params = grad_params if grad_params is not None else params
    if len(grad_params) != len(params):
        raise OracleError("parameter lists of the two twins differ in length")
    with torch.no_grad():
        if objective().item() != objective().item():
            raise OracleError("objective is not deterministic under frozen RNG")

    for p in grad_params:
        p.grad = None
    grad_objective().backward()
    grads = [
        (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
        for p in grad_params
    ]
    scale = max(float(g.abs().max()) for g in grads)
    scale = max(scale, 1e-12)
    if corrupt_offset:
        grads = [g + corrupt_offset * scale for g in grads]

    sizes = [p.numel() for p in params]
    total = sum(sizes)
    count = min(n_coords, total)
    chosen = rng.choice(total, size=count, replace=False)

    bounds = np.cumsum([0] + sizes)
    max_rel = 0.0
    with torch.no_grad():
        for global_idx in sorted(int(i) for i in chosen):
            pi = int(np.searchsorted(bounds, global_idx, side="right") - 1)
            offset = global_idx - int(bounds[pi])
            flat = params[pi].reshape(-1)
            original = flat[offset].clone()
            flat[offset] = original + eps_fd
            f_plus = objective().item()
            flat[offset] = original - eps_fd
            f_minus = objective().item()
            flat[offset] = original
            numeric = (f_plus - f_minus) / (2.0 * eps_fd)
            analytic = float(grads[pi].reshape(-1)[offset])
            max_rel = max(max_rel, abs(analytic - numeric) / scale)
    return max_rel


def _smooth_images(shape, stream, sigma=2.0):
    raw = stream.uniform(0.0, 1.0, size=shape)
    smooth = np.stack(
        [gaussian_filter(raw[b, c], sigma=sigma)
         for b in range(shape[0]) for c in range(shape[1])]
    ).reshape(shape)
    lo, hi = smooth.min(), smooth.max()
    return ((smooth - lo) / max(hi - lo, 1e-9)).astype(np.float64)


def _perturb(model, stream, scale=0.05):
    # push parameters off initialization symmetries and interpolation kinks
    with torch.no_grad():
        for p in model.parameters():
            noise = stream.uniform(-scale, scale, size=tuple(p.shape))
            p.add_(torch.as_tensor(noise, dtype=p.dtype))


def _cosine(p, z):
    num = (p * z).sum(dim=1)
    denom = p.norm(dim=1) * z.norm(dim=1) + COSINE_EPS
    return (num / denom).mean()


def _tiny_models(seed):
    """Tiny float32 hosts with perturbed parameters plus a smooth batch."""
    resolution = 16
    widths = (4, 6, 8)
    siamese = SiameseModel(widths=widths)
    siamese.init_parameters(rngmod.stream(seed, "gradcheck", "init", "siamese"))
    recon = MaskedReconModel(resolution=resolution, widths=widths)
    recon.init_parameters(rngmod.stream(seed, "gradcheck", "init", "recon"))
    disc = Discriminator(widths[-1], resolution // 8, width=8)
    disc.init_parameters(rngmod.stream(seed, "gradcheck", "init", "disc"))
    _perturb(siamese, rngmod.stream(seed, "gradcheck", "perturb", "siamese"))
    _perturb(recon, rngmod.stream(seed, "gradcheck", "perturb", "recon"))
    _perturb(disc, rngmod.stream(seed, "gradcheck", "perturb", "disc"))

    imgs = _smooth_images(
        (2, 3, resolution, resolution), rngmod.stream(seed, "gradcheck", "images")
    )
    i0 = torch.as_tensor(imgs, dtype=torch.float32)
    i1 = torch.as_tensor(imgs[::-1].copy(), dtype=torch.float32)

    side = resolution // 8
    mask_stream = rngmod.stream(seed, "gradcheck", "mask")
    grid = torch.zeros(2, side, side, dtype=torch.bool)
    flat = grid.view(2, -1)
    for b in range(2):
        idx = mask_stream.choice(side * side, size=max(1, side * side // 4),
                                 replace=False)
        flat[b, torch.as_tensor(np.asarray(idx, dtype=np.int64))] = True
    return siamese, recon, disc, i0, i1, grid


def _make_cases(siamese, recon, disc, i0, i1, grid):
    """The five checked objectives as (name, objective, params) triples."""
    with torch.no_grad():
        base = siamese(i0, i1)
        z0_const, z1_const = base.z0.clone(), base.z1.clone()
        z_const = recon.encode(i0).clone()
        z_hat_const = recon(i0, mask_grid=grid).z_hat.clone()

    def siamese_lm():
        out = siamese(i0, i1)
        return -0.5 * (_cosine(out.p0, z0_const) + _cosine(out.p1, z1_const))

    def siamese_lmt():
        return siamese_lm() + bce_label(disc(siamese(i0, i1).pair.f0), 1)

    def recon_lm():
        out = recon(i0, mask_grid=grid)
        return ((z_const - out.z_hat) ** 2).mean()

    def recon_lmt():
        out = recon(i0, mask_grid=grid)
        lm = ((z_const - out.z_hat) ** 2).mean()
        return lm + bce_label(disc(out.pair.f0), 1)

    def disc_ldt():
        return bce_label(disc(z_const), 0) + bce_label(disc(z_hat_const), 1)

    siamese_params = [p for p in siamese.parameters() if p.requires_grad]
    recon_params = [p for p in recon.parameters() if p.requires_grad]
    disc_params = list(disc.parameters())
    return [
        ("L_M/siamese", siamese_lm, siamese_params),
        ("L_MT/siamese", siamese_lmt, siamese_params),
        ("L_M/masked-recon", recon_lm, recon_params),
        ("L_MT/masked-recon", recon_lmt, recon_params),
        ("L_DT/discriminator", disc_ldt, disc_params),
    ]


def standard_gradchecks(dtype=torch.float64, seed=0, n_coords=48, corrupt=None):
    """Gradcheck L_M (both hosts), L_MT (both hosts) and L_DT on tiny models.

    Returns a list of (name, max_rel_error, tolerance) tuples.  ``corrupt``
    names one objective whose analytic gradient is deliberately scaled,
    for fault-injection tests.
    """
    siamese32, recon32, disc32, i0_32, i1_32, grid = _tiny_models(seed)
    siamese64 = copy.deepcopy(siamese32).double()
    recon64 = copy.deepcopy(recon32).double()
    disc64 = copy.deepcopy(disc32).double()
    i0_64, i1_64 = i0_32.double(), i1_32.double()

    fd_cases = _make_cases(siamese64, recon64, disc64, i0_64, i1_64, grid)
    if dtype == torch.float64:
        grad_cases = fd_cases
    elif dtype == torch.float32:
        grad_cases = _make_cases(siamese32, recon32, disc32, i0_32, i1_32, grid)
    else:
        raise OracleError(f"unsupported gradcheck dtype {dtype}")

    tol = TOLERANCE[dtype]
    results = []
    for (name, fd_obj, fd_params), (_, g_obj, g_params) in zip(fd_cases, grad_cases):
        err = finite_difference_gradcheck(
            fd_obj,
            fd_params,
            EPS_FD,
            n_coords=n_coords,
            rng=rngmod.stream(seed, "gradcheck", "coords", name),
            corrupt_offset=0.05 if corrupt == name else 0.0,
            grad_objective=g_obj,
            grad_params=g_params,
        )
        results.append((name, err, tol))
    return results
