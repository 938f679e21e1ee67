import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapticheart.geometry import (
    DegenerateConfiguration,
    GeometryError,
    RigidTransform,
    TooFewPoints,
    apply,
    calibration_residual,
    compose,
    invert,
    load_correspondences,
    plane_basis,
    rotation_angle_between,
    solve_rigid_transform,
    vec3,
)

TETRAHEDRON = np.array(
    [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
)


def random_transform(rng) -> RigidTransform:
    axis = rng.normal(size=3)
    angle = rng.uniform(0, np.pi)
    return RigidTransform.from_rotvec_translation(axis, angle, rng.uniform(-1, 1, 3))


def test_apply_identity():
    p = vec3(0.1, 0.2, 0.3)
    assert np.allclose(apply(RigidTransform.identity(), p), [0.1, 0.2, 0.3])


def test_apply_translation():
    T = RigidTransform(np.eye(3), np.array([0.0, 0.0, 0.1]))
    assert np.allclose(apply(T, vec3(0, 0, 0)), [0, 0, 0.1])


def test_apply_rotation_z90():
    T = RigidTransform.from_rotvec_translation([0, 0, 1], math.pi / 2, [0, 0, 0])
    assert np.allclose(apply(T, vec3(1, 0, 0)), [0, 1, 0], atol=1e-12)


def test_compose_identity_is_other():
    rng = np.random.default_rng(1)
    T = random_transform(rng)
    C = compose(RigidTransform.identity(), T)
    assert np.allclose(C.rotation, T.rotation)
    assert np.allclose(C.translation, T.translation)


def test_invert_translation():
    T = RigidTransform(np.eye(3), np.array([1.0, 2.0, 3.0]))
    Ti = invert(T)
    assert np.allclose(Ti.translation, [-1, -2, -3])


def test_random_round_trip():
    rng = np.random.default_rng(42)
    for _ in range(100):
        T = random_transform(rng)
        p = rng.uniform(-1, 1, 3)
        assert np.linalg.norm(apply(invert(T), apply(T, p)) - p) < 1e-9
        assert np.linalg.norm(apply(compose(T, invert(T)), p) - p) < 1e-9


def test_compose_matches_sequential_apply():
    rng = np.random.default_rng(3)
    T1, T2 = random_transform(rng), random_transform(rng)
    p = rng.uniform(-1, 1, 3)
    assert np.allclose(apply(compose(T1, T2), p), apply(T1, apply(T2, p)), atol=1e-12)


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_isometry_property(seed):
    rng = np.random.default_rng(seed)
    T = random_transform(rng)
    p, q = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
    assert abs(
        np.linalg.norm(apply(T, p) - apply(T, q)) - np.linalg.norm(p - q)
    ) < 1e-9


def test_rotation_not_orthonormal_rejected():
    with pytest.raises(GeometryError):
        RigidTransform(np.eye(3) * 2.0, np.zeros(3))


def test_reflection_rejected():
    R = np.diag([1.0, 1.0, -1.0])
    with pytest.raises(GeometryError):
        RigidTransform(R, np.zeros(3))


def test_solve_identity_on_matching_sets():
    T = solve_rigid_transform(TETRAHEDRON, TETRAHEDRON)
    assert np.allclose(T.rotation, np.eye(3), atol=1e-12)
    assert np.allclose(T.translation, 0, atol=1e-12)
    assert calibration_residual(T, TETRAHEDRON, TETRAHEDRON) < 1e-12


def test_solve_pure_translation():
    dst = TETRAHEDRON + np.array([0, 0, 0.05])
    T = solve_rigid_transform(TETRAHEDRON, dst)
    assert np.allclose(T.rotation, np.eye(3), atol=1e-9)
    assert np.allclose(T.translation, [0, 0, 0.05], atol=1e-12)


def test_solve_recovers_constructed_transform():
    T = RigidTransform.from_rotvec_translation([0, 0, 1], math.radians(37), [0.1, -0.2, 0.3])
    dst = apply(T, TETRAHEDRON)
    S = solve_rigid_transform(TETRAHEDRON, dst)
    assert rotation_angle_between(T.rotation, S.rotation) < 1e-7
    assert np.linalg.norm(T.translation - S.translation) < 1e-9
    assert calibration_residual(S, TETRAHEDRON, dst) < 1e-9


def test_solve_with_noise_keeps_residual_near_noise_scale():
    rng = np.random.default_rng(11)
    T = RigidTransform.from_rotvec_translation([1, 2, 3], 0.7, [0.1, 0.2, -0.1])
    src = rng.uniform(-0.3, 0.3, (10, 3))
    dst = apply(T, src) + rng.normal(0, 0.001, (10, 3))
    S = solve_rigid_transform(src, dst)
    assert calibration_residual(S, src, dst) < 0.003


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_solve_property_recovery_and_no_reflection(seed):
    rng = np.random.default_rng(seed)
    T = random_transform(rng)
    n = int(rng.integers(4, 12))
    src = rng.uniform(-0.5, 0.5, (n, 3))
    S = solve_rigid_transform(src, apply(T, src))
    assert rotation_angle_between(T.rotation, S.rotation) < 1e-7
    assert np.linalg.norm(T.translation - S.translation) < 1e-9
    assert np.linalg.det(S.rotation) > 0


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        solve_rigid_transform(TETRAHEDRON[:2], TETRAHEDRON[:2])


def test_collinear_points_rejected():
    src = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], dtype=float)
    with pytest.raises(DegenerateConfiguration):
        solve_rigid_transform(src, src)


def test_residual_uniform_offset():
    dst = TETRAHEDRON + np.array([0, 0, 0.002])
    r = calibration_residual(RigidTransform.identity(), TETRAHEDRON, dst)
    assert abs(r - 0.002) < 1e-12


def test_residual_monte_carlo_tracks_noise():
    rng = np.random.default_rng(5)
    sigma = 0.004
    residuals = []
    for _ in range(50):
        src = rng.uniform(-0.3, 0.3, (20, 3))
        dst = src + rng.normal(0, sigma, (20, 3))
        residuals.append(calibration_residual(RigidTransform.identity(), src, dst))
    mean = np.mean(residuals)
    # RMS of isotropic Gaussian displacement is sigma * sqrt(3).
    assert 0.8 * sigma * math.sqrt(3) < mean < 1.2 * sigma * math.sqrt(3)


def test_residual_length_mismatch():
    with pytest.raises(GeometryError):
        calibration_residual(RigidTransform.identity(), TETRAHEDRON, TETRAHEDRON[:3])


def test_plane_basis_conventions():
    u, v = plane_basis([0, 0, 1])
    assert np.allclose(u, [1, 0, 0])
    assert np.allclose(v, [0, 1, 0])
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = rng.normal(size=3)
        n = n / np.linalg.norm(n)
        u, v = plane_basis(n)
        assert abs(np.dot(u, n)) < 1e-9
        assert abs(np.dot(v, n)) < 1e-9
        assert abs(np.dot(u, v)) < 1e-9
        assert abs(np.linalg.norm(u) - 1) < 1e-9
        assert abs(np.linalg.norm(v) - 1) < 1e-9


def test_vec3_rejects_nonfinite():
    with pytest.raises(GeometryError):
        vec3(float("nan"), 0, 0)


def test_load_correspondences(tmp_path):
    path = tmp_path / "pairs.csv"
    path.write_text("# comment\n0,0,0,0,0,0.05\n1,0,0,1,0,0.05\n0,1,0,0,1,0.05\n\n")
    src, dst = load_correspondences(path)
    assert src.shape == (3, 3)
    assert np.allclose(dst[:, 2], 0.05)
    T = solve_rigid_transform(src, dst)
    assert np.allclose(T.translation, [0, 0, 0.05], atol=1e-12)


def test_load_correspondences_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n")
    with pytest.raises(GeometryError):
        load_correspondences(path)
