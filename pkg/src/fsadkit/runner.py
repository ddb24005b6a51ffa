"""Experiment orchestration: leave-one-out sweeps over (K, seed, category).

Each cell trains one model on one episode and evaluates it on the target
category's test set.  Cells are fully independent (own RNG streams, own
output directory) and may run in a process pool sized by the
``FSADKIT_WORKERS`` environment variable (default: sequential).  Cell
computation pins torch to one thread so results do not depend on the
pool size.

Directory scheme (a pure function of config hash, K, seed and category)::

    <output_dir>/resolved.yaml
    <output_dir>/dataset/...                    (generated when synthetic)
    <output_dir>/cells/<cfg>/K<k>/seed<s>/<category>/
        manifest.json  metrics.jsonl  checkpoint.ckpt  result.json
    <output_dir>/results.jsonl
"""

import datetime
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import torch
from PIL import Image

from . import __version__
from . import rng as rngmod
from .checkpoint import load_checkpoint, save_checkpoint
from .config import save_resolved
from .data.episode import EpisodeSpec, build_episode
from .data.index import scan_dataset
from .data.synthetic import generate_synthetic
from .errors import NotFoundError, UndefinedMetricError
from .evaluation.metrics import auroc, pixel_auroc
from .evaluation.scoring import score_episode_recon, score_episode_siamese
from .models.discriminator import Discriminator
from .models.recon import MaskedReconModel
from .models.siamese import SiameseModel
from .training.trainer import TrainState, TrainerConfig, train_epoch

WORKERS_ENV = "FSADKIT_WORKERS"
ENCODER_WIDTHS = (16, 32, 64)


def worker_count():
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def prepare_dataset(config):
    """Scan the configured dataset, generating the synthetic one if asked."""
    if config.synthetic is not None:
        root = os.path.join(config.output_dir, "dataset")
        marker = os.path.join(root, ".complete")
        if not os.path.isfile(marker):
            os.makedirs(root, exist_ok=True)
            generate_synthetic(config.synthetic, root)
            with open(marker, "w") as fh:
                fh.write("ok\n")
        return scan_dataset(root, "mvtec-style")
    return scan_dataset(config.dataset_root, config.dataset_layout)


def dataset_fingerprint(index):
    listing = []
    for cat in index.categories:
        c = index.category(cat)
        listing.append(cat)
        listing.extend(os.path.basename(p) for p in c.train_normals)
        listing.extend(
            f"{os.path.basename(t.image)}:{t.label}" for t in c.test_items
        )
    return hashlib.sha256("\n".join(listing).encode()).hexdigest()[:16]


def cell_dir(config, shots, seed, category):
    return os.path.join(
        config.output_dir,
        "cells",
        config.config_hash(),
        f"K{shots}",
        f"seed{seed}",
        category,
    )


def iter_cells(config, index):
    for shots in config.shots:
        for run in range(config.runs):
            for category in index.categories:
                yield shots, config.seed + run, category


def build_model(config, run_seed):
    if config.host == "siamese":
        model = SiameseModel(widths=ENCODER_WIDTHS)
        model.init_parameters(rngmod.stream(run_seed, "init", "siamese"))
    else:
        model = MaskedReconModel(
            resolution=config.resolution,
            widths=ENCODER_WIDTHS,
            mask_fraction=config.mask_fraction,
            mask_neighborhood=config.mask_neighborhood,
            pair_from=config.pair_from,
        )
        model.init_parameters(rngmod.stream(run_seed, "init", "masked-recon"))
    return model


def build_discriminator(config, run_seed):
    disc = Discriminator(ENCODER_WIDTHS[-1], config.resolution // 8)
    disc.init_parameters(rngmod.stream(run_seed, "init", "discriminator"))
    return disc


def _write_manifest(path, config, shots, seed, category, fingerprint):
    manifest = {
        "version": __version__,
        "config": config.to_dict(),
        "config_hash": config.config_hash(),
        "cell": {"shots": shots, "seed": seed, "category": category},
        "dataset_fingerprint": fingerprint,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def train_cell(config, index, shots, run_seed, category):
    """Train one (K, seed, category) cell; returns its directory."""
    torch.set_num_threads(1)
    out = cell_dir(config, shots, run_seed, category)
    os.makedirs(out, exist_ok=True)
    _write_manifest(
        os.path.join(out, "manifest.json"),
        config, shots, run_seed, category, dataset_fingerprint(index),
    )

    episode = build_episode(
        index,
        EpisodeSpec(target_category=category, shots=shots, seed=run_seed),
        config.resolution,
        standardize=config.standardize,
    )
    model = build_model(config, run_seed)
    disc = build_discriminator(config, run_seed) if config.adversarial else None
    # distinct batch/mask streams per cell
    cell_seed = rngmod.torch_seed(run_seed, "cell", category, f"K{shots}")
    state = TrainState.create(
        config.host, model, disc, config.optimizer, config.disc_optimizer, cell_seed
    )
    tcfg = TrainerConfig(
        batch_size=config.batch_size,
        pairs_per_epoch=config.pairs_per_epoch,
        adversarial=config.adversarial,
        symmetric_adversarial=config.symmetric_adversarial,
        disc_steps=config.disc_steps,
        grad_clip=config.grad_clip,
    )
    metrics_path = os.path.join(out, "metrics.jsonl")
    with open(metrics_path, "w") as fh:
        for epoch in range(config.epochs):
            metrics = train_epoch(state, episode, tcfg)
            fh.write(json.dumps(metrics, sort_keys=True) + "\n")
            if config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
                save_checkpoint(
                    model,
                    os.path.join(out, f"checkpoint_epoch{epoch + 1:04d}.ckpt"),
                    meta={"host": config.host, "epoch": epoch + 1},
                )
    save_checkpoint(
        model,
        os.path.join(out, "checkpoint.ckpt"),
        meta={"host": config.host, "epoch": config.epochs},
    )
    return out


def _save_map_png(path, anomaly_map):
    amap = np.asarray(anomaly_map, dtype=np.float64)
    span = amap.max() - amap.min()
    if span <= 0:
        norm = np.zeros_like(amap)
    else:
        norm = (amap - amap.min()) / span
    Image.fromarray((norm * 65535.0).round().astype(np.uint16)).save(path, format="PNG")


def evaluate_cell(config, index, shots, run_seed, category):
    """Score one trained cell; writes and returns its result record."""
    torch.set_num_threads(1)
    out = cell_dir(config, shots, run_seed, category)
    ckpt = os.path.join(out, "checkpoint.ckpt")
    if not os.path.isfile(ckpt):
        raise NotFoundError(f"missing checkpoint {ckpt}")
    episode = build_episode(
        index,
        EpisodeSpec(target_category=category, shots=shots, seed=run_seed),
        config.resolution,
        standardize=config.standardize,
    )
    model = build_model(config, run_seed)
    load_checkpoint(model, ckpt)

    if config.host == "siamese":
        maps, scores = score_episode_siamese(
            model, episode,
            shrinkage=config.shrinkage,
            sigma=config.smoothing_sigma,
            reduction=config.score_reduction,
        )
    else:
        maps, scores = score_episode_recon(
            model, episode,
            sigma=config.smoothing_sigma,
            reduction=config.score_reduction,
        )

    labels = [t.label for t in episode.test]
    if len(set(labels)) < 2:
        raise UndefinedMetricError(
            f"test split of {category!r} contains a single class"
        )
    image_auc = auroc(scores, labels)
    masks = [t.mask for t in episode.test]
    pixel_auc = pixel_auroc(maps, masks, seed=run_seed)

    if config.save_maps:
        maps_dir = os.path.join(out, "maps")
        os.makedirs(maps_dir, exist_ok=True)
        for sample, amap in zip(episode.test, maps):
            stem = os.path.splitext(os.path.basename(sample.image_id))[0]
            _save_map_png(os.path.join(maps_dir, f"{sample.label}_{stem}.png"), amap)

    record = {
        "host": config.host,
        "adversarial": config.adversarial,
        "seed": run_seed,
        "K": shots,
        "category": category,
        "image_auc": image_auc,
        "pixel_auc": pixel_auc,
        "n_test": len(labels),
    }
    with open(os.path.join(out, "result.json"), "w") as fh:
        json.dump(record, fh, sort_keys=True)
        fh.write("\n")
    return record


def _train_worker(args):
    config, index, shots, seed, category = args
    train_cell(config, index, shots, seed, category)
    return (shots, seed, category)


def _evaluate_worker(args):
    config, index, shots, seed, category = args
    return evaluate_cell(config, index, shots, seed, category)


def _run_pool(worker, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, jobs))


def train_all(config, progress=None):
    """Train every (K, seed, category) cell of the experiment."""
    os.makedirs(config.output_dir, exist_ok=True)
    save_resolved(config, os.path.join(config.output_dir, "resolved.yaml"))
    index = prepare_dataset(config)
    jobs = [
        (config, index, shots, seed, category)
        for shots, seed, category in iter_cells(config, index)
    ]
    done = 0
    for result in _run_pool(_train_worker, jobs, worker_count()):
        done += 1
        if progress:
            progress(f"trained K={result[0]} seed={result[1]} {result[2]} "
                     f"({done}/{len(jobs)})")
    return len(jobs)


def evaluate_all(config, progress=None):
    """Evaluate every cell and merge records into results.jsonl."""
    index = prepare_dataset(config)
    jobs = [
        (config, index, shots, seed, category)
        for shots, seed, category in iter_cells(config, index)
    ]
    records = _run_pool(_evaluate_worker, jobs, worker_count())
    records.sort(key=lambda r: (r["K"], r["seed"], r["category"]))
    results_path = os.path.join(config.output_dir, "results.jsonl")
    with open(results_path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if progress:
        progress(f"wrote {len(records)} records to {results_path}")
    return records
