"""Build a small luma-balanced dataset and grow it with offline augmentation.

Backgrounds are sorted by median luma into ten equal bins, and every split
draws evenly from them, so dark and bright scenes are equally represented.
"""

# %%
from pathlib import Path

import numpy as np

from markerkit import augment_detection_set, generate_dataset, load_dictionary
from markerkit.synthgen import synthetic_background

out = Path("demo_out/dataset")
rng = np.random.default_rng(3)
backgrounds = [synthetic_background(rng) for _ in range(20)]
manifests = generate_dataset(backgrounds, load_dictionary(), out, seed=3, split_sizes=(8, 2))
for name, m in manifests.items():
    n_real = sum(not a.fake for r in m.images for a in r.markers)
    print(f"{name}: {len(m.images)} images, {n_real} real markers")

# %%
# Nine augmented copies per image: a lighting gradient, then random blur,
# color shift and noise. Corner labels are unchanged by these.
augmented = augment_detection_set(manifests["train"], out / "train_aug", seed=3)
print(f"augmented train split: {len(augmented.images)} images (originals plus nine copies each)")
