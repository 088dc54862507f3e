"""Tests for the canonical skeleton representation and validation."""

import math

import numpy as np
import pytest

from signflow.skeleton import (
    ALL_JOINTS,
    INCOMPLETE_FRAME,
    NEGATIVE_TIMESTAMP,
    NON_MONOTONIC_TIME,
    TOO_SHORT,
    UPPER_BODY,
    Joint3D,
    JointId,
    MissingJointError,
    SkeletonFrame,
    SkeletonSequence,
    forward_fill,
    select_upper_body,
    validate_sequence,
)


def full_frame(ts=0.0, offset=0.0):
    joints = {
        j: Joint3D(offset + 0.1 * int(j), offset + 0.01 * int(j), offset + 1.0)
        for j in ALL_JOINTS
    }
    return SkeletonFrame(timestamp=ts, joints=joints)


class TestJoint3D:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Joint3D(math.nan, 0.0, 0.0)
        with pytest.raises(ValueError):
            Joint3D(0.0, math.inf, 0.0)

    def test_rejects_bad_confidence(self):
        with pytest.raises(ValueError):
            Joint3D(0.0, 0.0, 0.0, confidence=1.5)
        with pytest.raises(ValueError):
            Joint3D(0.0, 0.0, 0.0, confidence=-0.1)

    def test_as_tuple(self):
        assert Joint3D(1.0, 2.0, 3.0).as_tuple() == (1.0, 2.0, 3.0)


class TestJointIds:
    def test_fifteen_joints_eleven_upper(self):
        assert len(ALL_JOINTS) == 15
        assert len(UPPER_BODY) == 11

    def test_upper_body_excludes_legs(self):
        lower = {JointId.LKnee, JointId.RKnee, JointId.LFoot, JointId.RFoot}
        assert lower.isdisjoint(set(UPPER_BODY))
        assert JointId.LHip in UPPER_BODY and JointId.RHip in UPPER_BODY

    def test_upper_body_in_canonical_order(self):
        ids = [int(j) for j in UPPER_BODY]
        assert ids == sorted(ids)


class TestSelectUpperBody:
    def test_keeps_exactly_upper_body(self):
        out = select_upper_body(full_frame())
        assert set(out.joints) == set(UPPER_BODY)

    def test_values_unchanged(self):
        frame = full_frame(offset=0.25)
        out = select_upper_body(frame)
        for j in UPPER_BODY:
            assert out.joint(j) == frame.joint(j)
        assert out.timestamp == frame.timestamp

    def test_idempotent(self):
        once = select_upper_body(full_frame())
        twice = select_upper_body(once)
        assert twice.joints == once.joints

    def test_missing_joint_raises(self):
        frame = full_frame()
        joints = dict(frame.joints)
        del joints[JointId.LElbow]
        with pytest.raises(MissingJointError) as err:
            select_upper_body(SkeletonFrame(timestamp=0.0, joints=joints))
        assert err.value.joint == JointId.LElbow

    def test_missing_lower_body_is_fine(self):
        frame = full_frame()
        joints = {j: frame.joints[j] for j in UPPER_BODY}
        out = select_upper_body(SkeletonFrame(timestamp=0.0, joints=joints))
        assert set(out.joints) == set(UPPER_BODY)


class TestValidateSequence:
    def test_clean_sequence_no_defects(self):
        seq = SkeletonSequence(frames=[full_frame(0.0), full_frame(0.033), full_frame(0.066)])
        assert validate_sequence(seq) == []

    def test_too_short(self):
        seq = SkeletonSequence(frames=[full_frame(0.0)])
        codes = [d.code for d in validate_sequence(seq)]
        assert TOO_SHORT in codes

    def test_non_monotonic_time(self):
        seq = SkeletonSequence(frames=[full_frame(0.0), full_frame(0.5), full_frame(0.5)])
        defects = validate_sequence(seq)
        assert [d.code for d in defects] == [NON_MONOTONIC_TIME]
        assert defects[0].frame_index == 2

    def test_negative_timestamp(self):
        seq = SkeletonSequence(frames=[full_frame(-1.0), full_frame(0.0)])
        codes = [d.code for d in validate_sequence(seq)]
        assert NEGATIVE_TIMESTAMP in codes

    def test_incomplete_frame(self):
        frame = full_frame(1.0)
        joints = dict(frame.joints)
        del joints[JointId.RHand]
        bad = SkeletonFrame(timestamp=1.0, joints=joints)
        seq = SkeletonSequence(frames=[full_frame(0.0), bad])
        defects = validate_sequence(seq)
        assert [d.code for d in defects] == [INCOMPLETE_FRAME]
        assert defects[0].frame_index == 1

    def test_total_never_raises(self):
        # every defect at once
        frame = full_frame(-2.0)
        joints = dict(frame.joints)
        del joints[JointId.Head]
        seq = SkeletonSequence(frames=[SkeletonFrame(timestamp=-2.0, joints=joints)])
        codes = {d.code for d in validate_sequence(seq)}
        assert TOO_SHORT in codes and NEGATIVE_TIMESTAMP in codes


class TestForwardFill:
    def test_holds_last_value(self):
        base = full_frame(0.0)
        raw = [
            (0.0, dict(base.joints)),
            (0.1, {**base.joints, JointId.LHand: None}),
            (0.2, dict(full_frame(0.0, offset=1.0).joints)),
        ]
        frames = forward_fill(raw)
        assert frames[1].joint(JointId.LHand) == base.joint(JointId.LHand)
        assert frames[2].joint(JointId.LHand) == full_frame(0.0, offset=1.0).joint(JointId.LHand)

    def test_first_frame_missing_raises(self):
        base = full_frame(0.0)
        raw = [(0.0, {**base.joints, JointId.Torso: None})]
        with pytest.raises(MissingJointError) as err:
            forward_fill(raw)
        assert err.value.joint == JointId.Torso

    def test_gap_longer_than_one_frame(self):
        base = full_frame(0.0)
        raw = [(0.0, dict(base.joints))]
        for i in range(1, 4):
            raw.append((0.1 * i, {**base.joints, JointId.RElbow: None}))
        frames = forward_fill(raw)
        for f in frames:
            assert f.joint(JointId.RElbow) == base.joint(JointId.RElbow)

    def test_timestamps_preserved(self):
        base = full_frame(0.0)
        raw = [(0.0, dict(base.joints)), (0.4, dict(base.joints))]
        frames = forward_fill(raw)
        assert [f.timestamp for f in frames] == [0.0, 0.4]


class TestSequence:
    def test_len(self):
        seq = SkeletonSequence(frames=[full_frame(0.0), full_frame(0.1)])
        assert len(seq) == 2

    def test_label_and_subject_optional(self):
        seq = SkeletonSequence(frames=[full_frame(0.0)], label="wave", subject="s01")
        assert seq.label == "wave"
        assert seq.subject == "s01"

    def test_frame_joint_missing_raises(self):
        frame = full_frame()
        joints = {j: frame.joints[j] for j in UPPER_BODY}
        f = SkeletonFrame(timestamp=0.0, joints=joints)
        assert f.has(JointId.Head)
        assert not f.has(JointId.LFoot)
        with pytest.raises(MissingJointError):
            f.joint(JointId.LFoot)


def test_numpy_interop_roundtrip():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(15, 3))
    joints = {j: Joint3D(*pts[int(j)]) for j in ALL_JOINTS}
    frame = SkeletonFrame(timestamp=0.0, joints=joints)
    back = np.array([frame.joint(j).as_tuple() for j in ALL_JOINTS])
    np.testing.assert_array_equal(back, pts)
