import math

import numpy as np
import pytest

from shrimpmorph.skeleton import (
    RostrumState,
    Unit,
    View,
    extract_pixel_measurements,
    validate_skeleton,
)
from shrimpmorph.synth import (
    CAMERA_DISTANCE_MM,
    LabelNoise,
    SynthParams,
    generate_corpus,
    generate_sample,
)

QUIET = SynthParams(seed=9, label_noise=LabelNoise(0.0, 0.0))


def test_sample_is_deterministic():
    a = generate_sample(QUIET, 17)
    b = generate_sample(QUIET, 17)
    assert a.sample_id == b.sample_id == "synth-000017"
    assert np.array_equal(a.raster.rgb, b.raster.rgb)
    assert np.array_equal(a.raster.depth, b.raster.depth)
    assert a.gt_skeleton == b.gt_skeleton
    assert a.gt_measurements_cm.values == b.gt_measurements_cm.values


def test_different_indices_differ():
    a = generate_sample(QUIET, 0)
    b = generate_sample(QUIET, 1)
    assert not np.array_equal(a.raster.rgb, b.raster.rgb)


def test_specimen_grouping():
    recs = generate_corpus(QUIET, 26)
    assert recs[0].specimen_id == recs[11].specimen_id == "spec-00000"
    assert recs[12].specimen_id == "spec-00001"
    assert recs[25].specimen_id == "spec-00002"


def test_skeletons_are_valid_and_match_variant():
    for rec in generate_corpus(QUIET, 30):
        assert validate_skeleton(rec.gt_skeleton) == []
        assert rec.gt_skeleton.view is rec.gt_view
        assert rec.gt_skeleton.rostrum is rec.gt_rostrum


def test_gt_measurements_are_scaled_pixel_distances():
    for rec in generate_corpus(QUIET, 12):
        px = extract_pixel_measurements(rec.gt_skeleton)
        assert rec.gt_measurements_cm.unit is Unit.CENTIMETERS
        for name, cm in rec.gt_measurements_cm.values.items():
            assert cm == px.values[name] * QUIET.scale_cm_per_px


def test_keypoints_inside_canvas():
    for rec in generate_corpus(QUIET, 40):
        for kp in rec.gt_skeleton.keypoints:
            assert 0.0 <= kp.x <= QUIET.image_width - 1
            assert 0.0 <= kp.y <= QUIET.image_height - 1


def test_depth_plane_encodes_thickness():
    rec = generate_sample(QUIET, 3)
    depth = rec.raster.depth
    assert depth.max() == pytest.approx(CAMERA_DISTANCE_MM)
    assert depth.min() < CAMERA_DISTANCE_MM  # the body rises above the plane
    assert (depth >= 0).all()


def test_view_mix_and_rostrum_rates():
    """Empirical class rates stay within a 4-sigma binomial envelope."""
    n = 400
    recs = generate_corpus(QUIET, n)
    lateral = sum(r.gt_view is View.LATERAL for r in recs)
    broken = sum(r.gt_rostrum is RostrumState.BROKEN for r in recs)
    for count, p in ((lateral, QUIET.view_mix), (broken, QUIET.rostrum_break_prob)):
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(count - n * p) < 4 * sigma


def test_label_noise_flips_at_configured_rates():
    noisy = SynthParams(seed=5, label_noise=LabelNoise(0.3, 0.3))
    n = 400
    recs = generate_corpus(noisy, n)
    view_flips = sum(r.human_view is not r.gt_view for r in recs)
    rostrum_flips = sum(r.human_rostrum is not r.gt_rostrum for r in recs)
    sigma = math.sqrt(n * 0.3 * 0.7)
    assert abs(view_flips - n * 0.3) < 4 * sigma
    assert abs(rostrum_flips - n * 0.3) < 4 * sigma


def test_zero_noise_means_exact_labels():
    for rec in generate_corpus(QUIET, 60):
        assert rec.human_view is rec.gt_view
        assert rec.human_rostrum is rec.gt_rostrum


def test_broken_rostrum_has_no_keypoint1():
    broken = SynthParams(seed=2, rostrum_break_prob=1.0, label_noise=LabelNoise(0.0, 0.0))
    rec = generate_sample(broken, 0)
    assert rec.gt_rostrum is RostrumState.BROKEN
    assert rec.gt_skeleton.keypoint(1) is None
    assert "total" not in rec.gt_measurements_cm.values


def test_textured_background_is_nonblack_outside_body():
    params = SynthParams(seed=4, background="textured", label_noise=LabelNoise(0.0, 0.0))
    rec = generate_sample(params, 0)
    corner = rec.raster.rgb[:4, :4]
    assert corner.mean() > 10


def test_param_validation():
    with pytest.raises(ValueError):
        SynthParams(scale_cm_per_px=0.0).validate()
    with pytest.raises(ValueError):
        SynthParams(view_mix=1.5).validate()
    with pytest.raises(ValueError):
        SynthParams(rotations=(45,)).validate()
    with pytest.raises(ValueError):
        SynthParams(background="checker").validate()
    with pytest.raises(ValueError):
        generate_corpus(QUIET, 0)
