"""Independent plain-numpy reference implementations used as test oracles.

Everything here is deliberately loop-based and torch-free so the oracle
cannot share a bug with the implementation it checks.
"""

import math

import numpy as np


def conv2d(x, weight, bias, stride=1, padding=0):
    """x: (C_in, H, W); weight: (C_out, C_in, kh, kw)."""
    c_in, h, w = x.shape
    c_out, _, kh, kw = weight.shape
    padded = np.zeros((c_in, h + 2 * padding, w + 2 * padding), dtype=np.float64)
    padded[:, padding : padding + h, padding : padding + w] = x
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((c_out, oh, ow), dtype=np.float64)
    for co in range(c_out):
        for i in range(oh):
            for j in range(ow):
                patch = padded[:, i * stride : i * stride + kh, j * stride : j * stride + kw]
                out[co, i, j] = (patch * weight[co]).sum() + bias[co]
    return out


def relu(x):
    return np.maximum(x, 0.0)


def leaky_relu(x, slope=0.2):
    return np.where(x >= 0, x, slope * x)


def instance_norm(x, eps=1e-5):
    """Per-channel normalization with biased variance, like InstanceNorm2d."""
    out = np.empty_like(x)
    for c in range(x.shape[0]):
        mu = x[c].mean()
        var = x[c].var()
        out[c] = (x[c] - mu) / np.sqrt(var + eps)
    return out


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def bilinear_resize(src, out_h, out_w):
    """Half-pixel-center bilinear resize of an (H, W) array."""
    h, w = src.shape
    out = np.zeros((out_h, out_w), dtype=np.float64)
    for i in range(out_h):
        for j in range(out_w):
            sy = (i + 0.5) * h / out_h - 0.5
            sx = (j + 0.5) * w / out_w - 0.5
            y0, x0 = int(np.floor(sy)), int(np.floor(sx))
            wy, wx = sy - y0, sx - x0

            def px(y, x):
                return src[min(max(y, 0), h - 1), min(max(x, 0), w - 1)]

            out[i, j] = (
                (1 - wy) * (1 - wx) * px(y0, x0)
                + (1 - wy) * wx * px(y0, x0 + 1)
                + wy * (1 - wx) * px(y0 + 1, x0)
                + wy * wx * px(y0 + 1, x0 + 1)
            )
    return out


def affine_warp(image, theta):
    """Center-origin affine warp of one (C, H, W) image, border padded."""
    c, h, w = image.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    out = np.zeros_like(image, dtype=np.float64)
    (a, b, tx), (cc, d, ty) = theta
    for i in range(h):
        for j in range(w):
            x, y = j - cx, i - cy
            sx = a * x + b * y + tx * w / 2.0 + cx
            sy = cc * x + d * y + ty * h / 2.0 + cy
            x0, y0 = int(np.floor(sx)), int(np.floor(sy))
            wx, wy = sx - x0, sy - y0

            def px(ch, y, x):
                return image[ch, min(max(y, 0), h - 1), min(max(x, 0), w - 1)]

            for ch in range(c):
                out[ch, i, j] = (
                    (1 - wy) * (1 - wx) * px(ch, y0, x0)
                    + (1 - wy) * wx * px(ch, y0, x0 + 1)
                    + wy * (1 - wx) * px(ch, y0 + 1, x0)
                    + wy * wx * px(ch, y0 + 1, x0 + 1)
                )
    return out


def cosine_loss(p0, p1, z0, z1, eps=1e-8):
    """-0.5 [cos(p0, z1) + cos(p1, z0)] per position, averaged."""

    def mean_cos(p, z):
        vals = []
        for i in range(p.shape[1]):
            for j in range(p.shape[2]):
                a, b = p[:, i, j], z[:, i, j]
                vals.append(a.dot(b) / (np.linalg.norm(a) * np.linalg.norm(b) + eps))
        return np.mean(vals)

    return -0.5 * (mean_cos(p0, z1) + mean_cos(p1, z0))


def attention_block(x, wq, bq, wk, bk, wv, bv, wo, bo, w1, b1, w2, b2):
    """One decoder block on (N, C) tokens; torch Linear convention W @ x + b."""
    n, c = x.shape
    q = x @ wq.T + bq
    k = x @ wk.T + bk
    v = x @ wv.T + bv
    scores = q @ k.T / math.sqrt(c)
    attn = np.exp(scores - scores.max(axis=1, keepdims=True))
    attn = attn / attn.sum(axis=1, keepdims=True)
    y = x + (attn @ v) @ wo.T + bo
    y = y + relu(y @ w1.T + b1) @ w2.T + b2
    return y, attn


def auroc_bruteforce(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    credit = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                credit += 1.0
            elif p == n:
                credit += 0.5
    return credit / (len(pos) * len(neg))


def gaussian_kernel_1d(sigma, truncate=4.0):
    radius = int(truncate * sigma + 0.5)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def separable_gaussian(img, sigma, truncate=4.0):
    """Reflect-padded separable Gaussian smoothing of an (H, W) array."""
    k = gaussian_kernel_1d(sigma, truncate)
    r = (len(k) - 1) // 2

    def smooth_1d(line):
        padded = np.concatenate([line[r - 1 :: -1] if r else line[:0], line,
                                 line[: -r - 1 : -1] if r else line[:0]])
        return np.convolve(padded, k, mode="valid")

    tmp = np.apply_along_axis(smooth_1d, 0, img)
    return np.apply_along_axis(smooth_1d, 1, tmp)
