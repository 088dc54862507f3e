"""Canonical skeleton-sequence representation and upper-body joint selection.

Sequences are ordered lists of frames, one frame per capture timestamp, each
frame mapping joint ids to 3D world coordinates in meters (camera frame).
Everything downstream (descriptors, segmentation) consumes these types.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum


class SignflowError(Exception):
    """Base class for all errors raised by this package."""


class MissingJointError(SignflowError):
    """A required joint is absent from a frame."""

    def __init__(self, joint: "JointId"):
        self.joint = joint
        super().__init__(f"missing joint: {joint.name}")


class EmptyInputError(SignflowError):
    """An operation received an empty collection where data is required."""


class JointId(IntEnum):
    """The 15 full-body joints, in canonical (serialization) order."""

    Head = 0
    Neck = 1
    Torso = 2
    LShoulder = 3
    RShoulder = 4
    LElbow = 5
    RElbow = 6
    LHand = 7
    RHand = 8
    LHip = 9
    RHip = 10
    LKnee = 11
    RKnee = 12
    LFoot = 13
    RFoot = 14


# The 11 joints kept for sign description: everything above the knees.
UPPER_BODY: tuple[JointId, ...] = (
    JointId.Head,
    JointId.Neck,
    JointId.Torso,
    JointId.LShoulder,
    JointId.RShoulder,
    JointId.LElbow,
    JointId.RElbow,
    JointId.LHand,
    JointId.RHand,
    JointId.LHip,
    JointId.RHip,
)

ALL_JOINTS: tuple[JointId, ...] = tuple(JointId)


@dataclass(frozen=True)
class Joint3D:
    """One joint observation: world coordinates in meters plus confidence."""

    x: float
    y: float
    z: float
    confidence: float = 1.0

    def __post_init__(self):
        for name in ("x", "y", "z", "confidence"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"non-finite joint coordinate: {v!r}")
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence outside [0, 1]: {self.confidence!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class SkeletonFrame:
    """One timestamped skeleton observation."""

    timestamp: float
    joints: dict[JointId, Joint3D]

    def joint(self, jid: JointId) -> Joint3D:
        try:
            return self.joints[jid]
        except KeyError:
            raise MissingJointError(jid) from None

    def has(self, jid: JointId) -> bool:
        return jid in self.joints


@dataclass
class SkeletonSequence:
    """An isolated sign recording: ordered frames plus optional metadata."""

    frames: list[SkeletonFrame]
    label: int | None = None
    subject: str | None = None
    source: str = ""

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class Defect:
    """One invariant violation found by validate_sequence."""

    code: str
    message: str
    frame_index: int | None = None


TOO_SHORT = "TooShort"
NON_MONOTONIC_TIME = "NonMonotonicTime"
NEGATIVE_TIMESTAMP = "NegativeTimestamp"
INCOMPLETE_FRAME = "IncompleteFrame"


def select_upper_body(frame: SkeletonFrame) -> SkeletonFrame:
    """Restrict a frame to the 11 upper-body joints.

    Idempotent: a frame already holding only the upper-body subset passes
    through with identical values. Raises MissingJointError if any of the
    11 joints is absent.
    """
    kept = {}
    for jid in UPPER_BODY:
        if not frame.has(jid):
            raise MissingJointError(jid)
        kept[jid] = frame.joints[jid]
    return SkeletonFrame(timestamp=frame.timestamp, joints=kept)


def validate_sequence(seq: SkeletonSequence) -> list[Defect]:
    """Check SkeletonSequence invariants; returns one Defect per violation.

    Total: never raises, defects are data. An empty list means the sequence
    is well formed.
    """
    defects: list[Defect] = []
    if len(seq.frames) < 2:
        defects.append(Defect(TOO_SHORT, f"sequence has {len(seq.frames)} frame(s), need >= 2"))
    schema = set(seq.frames[0].joints.keys()) if seq.frames else set()
    prev_ts = None
    for i, frame in enumerate(seq.frames):
        if frame.timestamp < 0:
            defects.append(Defect(NEGATIVE_TIMESTAMP, f"timestamp {frame.timestamp} < 0", i))
        if prev_ts is not None and frame.timestamp <= prev_ts:
            defects.append(
                Defect(NON_MONOTONIC_TIME, f"timestamp {frame.timestamp} <= previous {prev_ts}", i)
            )
        prev_ts = frame.timestamp
        missing = schema - set(frame.joints.keys())
        if missing:
            names = ", ".join(sorted(j.name for j in missing))
            defects.append(Defect(INCOMPLETE_FRAME, f"frame lacks joints of its schema: {names}", i))
    return defects


def forward_fill(frames: list[tuple[float, dict[JointId, Joint3D | None]]]) -> list[SkeletonFrame]:
    """Repair missing joints by holding the last valid value per joint.

    Input frames map each joint to either an observation or None (missing or
    zero-confidence in the source data). The first frame must be complete;
    otherwise there is nothing to hold, and the sequence is rejected.
    """
    if not frames:
        raise ValueError("empty frame list")
    last: dict[JointId, Joint3D] = {}
    out: list[SkeletonFrame] = []
    for ts, joints in frames:
        repaired: dict[JointId, Joint3D] = {}
        for jid, obs in joints.items():
            if obs is None:
                if jid not in last:
                    # first frame incomplete: nothing to hold yet
                    raise MissingJointError(jid)
                repaired[jid] = last[jid]
            else:
                repaired[jid] = obs
                last[jid] = obs
        out.append(SkeletonFrame(timestamp=ts, joints=repaired))
    return out
