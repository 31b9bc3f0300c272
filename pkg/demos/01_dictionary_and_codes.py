"""Marker codes and how a noisy read is matched back to an id.

Each of the 250 entries is a 6x6 bit grid. Matching tries all four
clockwise quarter-turns of the observed grid and keeps the closest entry.
"""

# %%
# Load the bundled dictionary and look at one code.
import numpy as np

from markerkit import load_dictionary, match_code, rotate_bits

dictionary = load_dictionary()
print(f"{dictionary.name}: {len(dictionary)} codes")
print(dictionary[7])

# %%
# A code seen after the marker turned once clockwise. The matcher undoes the
# turn, so the reported rotation is the number of extra clockwise turns that
# bring the observation back to the stored orientation.
seen = rotate_bits(dictionary[7], 1)
print(match_code(dictionary, seen))

# %%
# Flip three random bits. The smallest distance between any two entries (over
# rotations) bounds how many errors can be corrected unambiguously.
rng = np.random.default_rng(0)
noisy = seen.copy()
for k in rng.choice(36, 3, replace=False):
    noisy.flat[k] ^= 1
print(match_code(dictionary, noisy))
