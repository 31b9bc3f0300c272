"""Corners as Gaussian heatmaps, and the weighted loss used to train on them."""

# %%
import numpy as np

from markerkit import decode_corners, encode_corners, weighted_mse
from markerkit.heatmap import weight_map

corners = np.array([[12.3, 10.8], [9.6, 50.2], [52.1, 54.7], [55.4, 8.9]])
target = encode_corners(corners)
print("heatmap", target.shape, "peak", target.max().round(3))

# %%
# Decoding thresholds the map, keeps blobs of plausible size and takes their
# value-weighted centroids. Sub-pixel positions survive the round trip.
decoded = decode_corners(target)
print(np.round(decoded, 3))

# %%
# The loss weights pixels from 1 (background) to 10 (peaks), so a prediction
# that misses the corners costs far more than one that is slightly noisy.
w = weight_map(target)
print("weights", w.min(), w.max())
rng = np.random.default_rng(4)
noisy = np.clip(target + rng.normal(0, 0.02, target.shape), 0, 1)
print("noisy prediction", round(weighted_mse(target, noisy), 5))
print("all-zero prediction", round(weighted_mse(target, np.zeros_like(target)), 5))
