"""Export the OpenCV DICT_6X6_250 code family to the plain-text dictionary format.

Run once; the output is checked in at ``src/markerkit/data/aruco_6x6_250.txt``.
Requires ``opencv-python`` (not a runtime dependency of markerkit).
"""
import sys

import cv2
import numpy as np


def main(out_path):
    d = cv2.aruco.getPredefinedDictionary(cv2.aruco.DICT_6X6_250)
    lines = [
        "# ArUco DICT_6X6_250, exported from OpenCV " + cv2.__version__,
        "# one marker per line, 36 bits row-major (0 = black, 1 = white); line order = id",
    ]
    for marker_id in range(250):
        img = cv2.aruco.generateImageMarker(d, marker_id, 8, borderBits=1)
        bits = (img[1:7, 1:7] > 127).astype(np.uint8)
        lines.append("".join(str(b) for b in bits.ravel()))
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/markerkit/data/aruco_6x6_250.txt")
