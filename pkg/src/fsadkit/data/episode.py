"""Leave-one-out episode construction and same-category pair sampling.

An episode fixes one target category: its K support images, the pooled
normal training images of every *other* category, and the target's test
set.  Support selection is reproducible: the indices are the first K
entries of ``stream(seed, "episode", target, "support").permutation(n)``
over the lexicographically sorted target train list.
"""

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from ..errors import InsufficientDataError, InvalidSpecError
from .preprocess import load_and_preprocess, load_mask


@dataclass(frozen=True)
class EpisodeSpec:
    target_category: str
    shots: int
    seed: int

    def validate(self, index):
        if self.target_category not in index.categories:
            raise InvalidSpecError(f"unknown target category {self.target_category!r}")
        if self.shots < 1:
            raise InvalidSpecError("shots must be a positive integer")
        available = len(index.category(self.target_category).train_normals)
        if self.shots > available:
            raise InvalidSpecError(
                f"requested {self.shots} shots but only {available} "
                f"normal train images exist for {self.target_category!r}"
            )
        return self


@dataclass(frozen=True)
class TestSample:
    image_id: str
    image: np.ndarray
    label: int
    mask: np.ndarray | None


@dataclass(frozen=True)
class Episode:
    """One FSAD trial; immutable and safe to share across workers."""

    target_category: str
    shots: int
    seed: int
    support: tuple            # K preprocessed (3, R, R) arrays
    support_ids: tuple
    train_pool: tuple         # (category, preprocessed image) for all others
    test: tuple               # TestSample entries for the target category
    resolution: int


def support_indices(index, spec):
    """Deterministic K support indices into the sorted target train list."""
    n = len(index.category(spec.target_category).train_normals)
    s = rngmod.stream(spec.seed, "episode", spec.target_category, "support")
    return [int(i) for i in s.permutation(n)[: spec.shots]]


def build_episode(index, spec, resolution, standardize=False):
    spec.validate(index)
    target = index.category(spec.target_category)
    chosen = support_indices(index, spec)
    support_paths = [target.train_normals[i] for i in chosen]
    support = tuple(
        load_and_preprocess(p, resolution, standardize) for p in support_paths
    )

    pool = []
    for name in index.categories:
        if name == spec.target_category:
            continue
        for path in index.category(name).train_normals:
            pool.append((name, load_and_preprocess(path, resolution, standardize)))

    test = []
    for item in target.test_items:
        mask = load_mask(item.mask, resolution) if item.mask else None
        test.append(
            TestSample(
                image_id=item.image,
                image=load_and_preprocess(item.image, resolution, standardize),
                label=item.label,
                mask=mask,
            )
        )
    return Episode(
        target_category=spec.target_category,
        shots=spec.shots,
        seed=spec.seed,
        support=support,
        support_ids=tuple(support_paths),
        train_pool=tuple(pool),
        test=tuple(test),
        resolution=resolution,
    )


def _pool_by_category(train_pool):
    grouped = {}
    for name, img in train_pool:
        grouped.setdefault(name, []).append(img)
    return grouped


def sample_pair(train_pool, rng):
    """Draw two distinct images of one uniformly chosen category.

    The draw is: pick a category uniformly from the sorted category list,
    then two indices without replacement via ``rng.choice``.
    """
    if not train_pool:
        raise InsufficientDataError("empty training pool")
    grouped = _pool_by_category(train_pool)
    names = sorted(grouped)
    cat = names[int(rng.integers(0, len(names)))]
    images = grouped[cat]
    if len(images) < 2:
        raise InsufficientDataError(
            f"category {cat!r} has {len(images)} image(s); need at least 2"
        )
    i, j = (int(k) for k in rng.choice(len(images), size=2, replace=False))
    return images[i], images[j]


def sample_pair_batch(train_pool, rng, batch_size):
    """Stack ``batch_size`` sampled pairs into two (B, 3, R, R) arrays."""
    pairs = [sample_pair(train_pool, rng) for _ in range(batch_size)]
    i0 = np.stack([p[0] for p in pairs])
    i1 = np.stack([p[1] for p in pairs])
    return i0, i1


def sample_image_batch(train_pool, rng, batch_size):
    """Uniform-with-replacement image batch for the reconstruction host."""
    if not train_pool:
        raise InsufficientDataError("empty training pool")
    idx = rng.integers(0, len(train_pool), size=batch_size)
    return np.stack([train_pool[int(i)][1] for i in idx])
