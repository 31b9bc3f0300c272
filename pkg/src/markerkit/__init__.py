"""Synthetic fiducial-marker data, marker codecs, a classical detector and metrics."""

from .dictionary import Dictionary, MatchResult, load_dictionary, match_code, rotate_bits
from .geometry import BBox, homography_from_quad, apply_homography, iou
from .marker_render import render_marker, make_fake_marker, project_marker, sample_pose
from .synthgen import compose_scene, generate_dataset
from .augment import augment_detection_set, geo_augment_crop, GeoTransform
from .heatmap import encode_corners, decode_corners, weighted_mse
from .decode import decode_at
from .detect_baseline import Detection, detect
from .evaluation import pr_curve, match_detections, marker_stats, decoder_pr

__version__ = "0.1.0"
