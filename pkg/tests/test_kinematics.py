import math
import random

import numpy as np
import pytest

from viewvr.geom import Pose, Quat, Vec3, quat_normalize
from viewvr.kinematics import (
    DHFileError,
    InvalidTargetError,
    JointConfig,
    JointLimits,
    NoSolutionError,
    UR3_DH,
    UR3_LIMITS,
    check_limits,
    fk,
    fk_matrix,
    ik,
    joint_distance,
    load_dh_file,
    load_limits_file,
    normalize_config,
    pose_difference,
    save_dh_file,
    save_limits_file,
    select_solution,
    wrap_angle,
)

from .oracles import dls_refine, fk_matrix_chain


def random_config(rng) -> JointConfig:
    return JointConfig(*(rng.uniform(-math.pi, math.pi) for _ in range(6)))


class TestForwardKinematics:
    def test_zero_config_matches_chain_oracle(self):
        # frozen from the independent matrix-chain oracle
        t = fk_matrix(JointConfig(0, 0, 0, 0, 0, 0))
        assert np.allclose(t[:3, 3], [-0.4569, -0.19425, 0.06655], atol=1e-15)
        want = fk_matrix_chain([0.0] * 6, UR3_DH.d, UR3_DH.a, UR3_DH.alpha)
        assert np.allclose(t, want, atol=1e-15)

    def test_matches_chain_oracle_random(self):
        rng = random.Random(101)
        for _ in range(100):
            q = random_config(rng)
            got = fk_matrix(q)
            want = fk_matrix_chain(q, UR3_DH.d, UR3_DH.a, UR3_DH.alpha)
            assert np.allclose(got, want, atol=1e-13)

    def test_q6_leaves_position_fixed(self):
        rng = random.Random(5)
        base = random_config(rng)
        p0 = fk(base).position
        for q6 in (-2.0, -0.5, 1.0, 3.0):
            p = fk(base._replace(q6=q6)).position
            assert (p - p0).norm() < 1e-12

    def test_q1_rotates_tcp_about_base_z(self):
        rng = random.Random(6)
        base = random_config(rng)
        p0 = fk(base).position
        for phi in (0.4, -1.1, 2.2):
            p = fk(base._replace(q1=base.q1 + phi)).position
            # radius from z-axis and height both preserved
            assert abs(math.hypot(p.x, p.y) - math.hypot(p0.x, p0.y)) < 1e-12
            assert abs(p.z - p0.z) < 1e-12
            got_phi = math.atan2(p.y, p.x) - math.atan2(p0.y, p0.x)
            assert abs(wrap_angle(got_phi - phi)) < 1e-9


class TestInverseKinematics:
    def test_roundtrip_seeded(self):
        rng = random.Random(202)
        for _ in range(300):
            q = normalize_config(random_config(rng))
            sols = ik(fk(q))
            assert sols, f"no solutions for {q}"
            best = min(joint_distance(s, q) for s in sols)
            assert best < 1e-16  # squared distance; 1e-8 per-joint budget

    def test_all_solutions_reverify_through_fk(self):
        rng = random.Random(203)
        for _ in range(100):
            target = fk(random_config(rng))
            for s in ik(target):
                dp, dang = pose_difference(fk(s), target)
                assert dp < 1e-9
                assert dang < 1e-9

    def test_unreachable_far_target_empty(self):
        reach = sum(abs(v) for v in UR3_DH.a) + sum(abs(v) for v in UR3_DH.d)
        target = Pose(Vec3(reach + 0.1, 0, 0), Quat(1, 0, 0, 0))
        assert ik(target) == []

    def test_inside_shoulder_cylinder_empty(self):
        # wrist center on the base axis is inside the d4 offset circle
        assert ik(Pose(Vec3(0.0, 0.0, 0.35), Quat(1, 0, 0, 0))) == []

    def test_non_unit_orientation_rejected(self):
        with pytest.raises(InvalidTargetError):
            ik(Pose(Vec3(0.2, 0.1, 0.2), Quat(1.1, 0, 0, 0)))

    def test_generic_pose_eight_solutions_confirmed_by_dls(self):
        rng = random.Random(204)
        checked = 0
        while checked < 10:
            q = random_config(rng)
            target = fk(q)
            sols = ik(target)
            if len(sols) != 8:
                continue  # non-generic draw; the acceptance suite counts these
            checked += 1
            t_target = fk_matrix_chain(q, UR3_DH.d, UR3_DH.a, UR3_DH.alpha)
            for s in sols:
                # perturb then let the numeric solver pull the branch back
                q0 = np.array(s) + rng.uniform(-0.01, 0.01)
                refined = dls_refine(q0, t_target, UR3_DH.d, UR3_DH.a, UR3_DH.alpha)
                refined = normalize_config(JointConfig(*refined))
                assert joint_distance(refined, s) < 1e-12

    def test_wrist_singular_target_drops_branches(self):
        # q5 = 0 aligns joints 4 and 6: q6 is undetermined on that branch
        q = JointConfig(0.4, -1.0, 1.1, -0.6, 0.0, 0.3)
        sols = ik(fk(q))
        assert len(sols) < 8
        for s in sols:
            dp, dang = pose_difference(fk(s), fk(q))
            assert dp < 1e-9 and dang < 1e-9


class TestSelectSolution:
    def test_singleton(self):
        q = JointConfig(0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
        assert select_solution([q], JointConfig(0, 0, 0, 0, 0, 0)) == q

    def test_exact_current_wins(self):
        rng = random.Random(9)
        sols = ik(fk(random_config(rng)))
        assert len(sols) >= 2
        assert select_solution(sols, sols[1]) == sols[1]

    def test_tie_breaks_to_lower_index(self):
        a = JointConfig(0.5, 0, 0, 0, 0, 0)
        b = JointConfig(-0.5, 0, 0, 0, 0, 0)
        cur = JointConfig(0, 0, 0, 0, 0, 0)
        assert select_solution([a, b], cur) == a
        assert select_solution([b, a], cur) == b

    def test_wraps_angle_differences(self):
        near = JointConfig(math.pi - 0.05, 0, 0, 0, 0, 0)
        far = JointConfig(1.0, 0, 0, 0, 0, 0)
        cur = JointConfig(-math.pi + 0.05, 0, 0, 0, 0, 0)  # 0.1 away through the seam
        assert select_solution([far, near], cur) == near

    def test_weight_scaling_invariance(self):
        rng = random.Random(10)
        sols = [random_config(rng) for _ in range(8)]
        cur = random_config(rng)
        w = tuple(rng.uniform(0.1, 3.0) for _ in range(6))
        w5 = tuple(5.0 * v for v in w)
        assert select_solution(sols, cur, w) == select_solution(sols, cur, w5)

    def test_empty_raises(self):
        with pytest.raises(NoSolutionError):
            select_solution([], JointConfig(0, 0, 0, 0, 0, 0))


class TestLimits:
    def test_inside_ok(self):
        assert check_limits(JointConfig(0, -1, 1, 0.5, -0.5, 2)) == ()

    def test_boundary_inclusive(self):
        lim = JointLimits(
            lower=(-1.0,) * 6, upper=(1.0,) * 6, velocity=(1.0,) * 6
        )
        assert check_limits(JointConfig(0, 0, 1.0, 0, 0, 0), lim) == ()
        assert check_limits(JointConfig(-1.0, 0, 0, 0, 0, 0), lim) == ()

    def test_reports_all_violations(self):
        lim = JointLimits(lower=(-1.0,) * 6, upper=(1.0,) * 6, velocity=(1.0,) * 6)
        bad = JointConfig(1.5, 0, 0, 0, -2.0, 0)
        assert check_limits(bad, lim) == (1, 5)

    def test_invalid_limits_rejected(self):
        with pytest.raises(ValueError):
            JointLimits(lower=(1.0,) * 6, upper=(1.0,) * 6, velocity=(1.0,) * 6)


class TestParamFiles:
    def test_dh_roundtrip(self, tmp_path):
        path = tmp_path / "dh.txt"
        save_dh_file(path, UR3_DH)
        assert load_dh_file(path) == UR3_DH

    def test_limits_roundtrip(self, tmp_path):
        path = tmp_path / "lim.txt"
        save_limits_file(path, UR3_LIMITS)
        assert load_limits_file(path) == UR3_LIMITS

    def test_missing_key(self, tmp_path):
        path = tmp_path / "dh.txt"
        path.write_text("joint1.a 0.0\n")
        with pytest.raises(DHFileError, match="missing key"):
            load_dh_file(path)

    def test_bad_number(self, tmp_path):
        path = tmp_path / "dh.txt"
        path.write_text("joint1.a zero\n")
        with pytest.raises(DHFileError, match="bad number"):
            load_dh_file(path)

    def test_comments_and_blanks_ok(self, tmp_path):
        path = tmp_path / "dh.txt"
        save_dh_file(path, UR3_DH)
        text = "# header\n\n" + path.read_text() + "\n# trailer\n"
        path.write_text(text)
        assert load_dh_file(path) == UR3_DH
