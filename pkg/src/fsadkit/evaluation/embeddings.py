"""Feature-embedding dumps for external projection/visualization."""

import csv

import numpy as np
import torch


def pooled_embedding(model, image):
    """Globally average-pooled f0 feature vector of one (3, R, R) image."""
    with torch.no_grad():
        feats = model.embed(torch.from_numpy(image[None]).float())
    return feats[0].mean(dim=(1, 2)).numpy()


def dump_embeddings(model, tagged_images, out_path):
    """Write one CSV record per (image_id, category, label, image).

    Columns: id, category, label, e_0..e_{C-1}.  Returns the record count.
    """
    rows = []
    for image_id, category, label, image in tagged_images:
        vec = pooled_embedding(model, np.asarray(image, dtype=np.float32))
        rows.append((image_id, category, label, vec))
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        dim = len(rows[0][3]) if rows else model.feature_channels
        writer.writerow(["id", "category", "label"] + [f"e_{i}" for i in range(dim)])
        for image_id, category, label, vec in rows:
            writer.writerow(
                [image_id, category, label] + [f"{v:.8e}" for v in vec]
            )
    return len(rows)
