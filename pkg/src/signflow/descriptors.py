"""Per-frame gesture descriptors and corpus z-normalization.

Four descriptor variants are supported. The relative body-part descriptor
(RBPD) stacks, for each hand, the displacement of every upper-body joint
from that hand; the hand descriptor (HD) keeps only the two hands relative
to the torso. The -T variants pair the reference joint at frame t with the
other joints at frame t+1, mixing spatial and temporal information:

    rbpd    delta_i = joint_i(t)   - hand(t)        66 components
    rbpd-t  delta_i = joint_i(t+1) - hand(t)        66 components
    hd      delta   = hand(t)      - torso(t)        6 components
    hd-t    delta   = hand(t)      - torso(t+1)      6 components

All variants are invariant to translating every joint by a common offset.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .skeleton import UPPER_BODY, JointId, SkeletonFrame, SkeletonSequence

ZNORM_FLOOR = 1e-8


class DescriptorVariant(str, Enum):
    HD = "hd"
    HD_T = "hd-t"
    RBPD = "rbpd"
    RBPD_T = "rbpd-t"

    @property
    def dimension(self) -> int:
        return 6 if self in (DescriptorVariant.HD, DescriptorVariant.HD_T) else 66

    @property
    def time_extended(self) -> bool:
        return self in (DescriptorVariant.HD_T, DescriptorVariant.RBPD_T)


@dataclass
class FrameDescriptor:
    values: np.ndarray
    variant: DescriptorVariant
    frame_index: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.variant.dimension,):
            raise ValueError(
                f"descriptor for {self.variant.value} must have "
                f"{self.variant.dimension} components, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("descriptor contains non-finite components")


@dataclass
class ZNormStats:
    """Per-component mean and (floored) population standard deviation."""

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.stddev = np.asarray(self.stddev, dtype=np.float64)
        if self.mean.shape != self.stddev.shape:
            raise ValueError("mean/stddev dimension mismatch")
        if np.any(self.stddev < ZNORM_FLOOR):
            raise ValueError(f"stddev components must be >= {ZNORM_FLOOR}")

    @property
    def dimension(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def identity(cls, dimension: int) -> "ZNormStats":
        return cls(np.zeros(dimension), np.ones(dimension))


def _positions(frame: SkeletonFrame, joints: tuple[JointId, ...]) -> np.ndarray:
    return np.array([frame.joint(j).as_tuple() for j in joints], dtype=np.float64)


def _rbpd_halves(ref: SkeletonFrame, others: SkeletonFrame) -> np.ndarray:
    """Concatenate joint-minus-hand displacements for right then left hand.

    Reference hands come from `ref`, the 11 tracked joints from `others`;
    passing the same frame twice gives the purely spatial descriptor.
    """
    joints = _positions(others, UPPER_BODY)
    halves = []
    for hand in (JointId.RHand, JointId.LHand):
        base = np.asarray(ref.joint(hand).as_tuple(), dtype=np.float64)
        halves.append((joints - base).ravel())
    return np.concatenate(halves)


def compute_rbpd(frame: SkeletonFrame, frame_index: int = 0) -> FrameDescriptor:
    """Relative body-part descriptor: all 11 joints minus each hand, 66-D.

    The triple where the tracked joint is the reference hand itself is
    exactly zero.
    """
    values = _rbpd_halves(frame, frame)
    return FrameDescriptor(values, DescriptorVariant.RBPD, frame_index)


def compute_rbpd_t(frame_t: SkeletonFrame, frame_t1: SkeletonFrame,
                   frame_index: int = 0) -> FrameDescriptor:
    """Time-extended RBPD: joints at t+1 minus hands at t, 66-D.

    The self-hand triple equals the hand's displacement between the frames.
    """
    values = _rbpd_halves(frame_t, frame_t1)
    return FrameDescriptor(values, DescriptorVariant.RBPD_T, frame_index)


def compute_hd(frame: SkeletonFrame, frame_index: int = 0) -> FrameDescriptor:
    """Hand descriptor: [RHand - Torso, LHand - Torso], 6-D."""
    torso = np.asarray(frame.joint(JointId.Torso).as_tuple(), dtype=np.float64)
    r = np.asarray(frame.joint(JointId.RHand).as_tuple(), dtype=np.float64)
    l = np.asarray(frame.joint(JointId.LHand).as_tuple(), dtype=np.float64)
    return FrameDescriptor(np.concatenate([r - torso, l - torso]), DescriptorVariant.HD, frame_index)


def compute_hd_t(frame_t: SkeletonFrame, frame_t1: SkeletonFrame,
                 frame_index: int = 0) -> FrameDescriptor:
    """Time-extended HD: hands at t minus torso at t+1, 6-D."""
    torso = np.asarray(frame_t1.joint(JointId.Torso).as_tuple(), dtype=np.float64)
    r = np.asarray(frame_t.joint(JointId.RHand).as_tuple(), dtype=np.float64)
    l = np.asarray(frame_t.joint(JointId.LHand).as_tuple(), dtype=np.float64)
    return FrameDescriptor(np.concatenate([r - torso, l - torso]), DescriptorVariant.HD_T, frame_index)


def describe_sequence(seq: SkeletonSequence,
                      variant: DescriptorVariant) -> list[FrameDescriptor]:
    """Descriptor stream for a whole sequence, in frame order.

    Spatial variants yield one descriptor per frame (n total); time-extended
    variants one per consecutive frame pair (n-1 total).
    """
    frames = seq.frames
    if variant is DescriptorVariant.RBPD:
        return [compute_rbpd(f, i) for i, f in enumerate(frames)]
    if variant is DescriptorVariant.HD:
        return [compute_hd(f, i) for i, f in enumerate(frames)]
    if variant is DescriptorVariant.RBPD_T:
        return [compute_rbpd_t(frames[i], frames[i + 1], i) for i in range(len(frames) - 1)]
    if variant is DescriptorVariant.HD_T:
        return [compute_hd_t(frames[i], frames[i + 1], i) for i in range(len(frames) - 1)]
    raise ValueError(f"unknown variant: {variant!r}")


def stack_descriptors(descriptors: list[FrameDescriptor]) -> np.ndarray:
    if not descriptors:
        raise ValueError("empty descriptor list")
    dim = descriptors[0].values.shape[0]
    for d in descriptors:
        if d.values.shape[0] != dim:
            raise ValueError("descriptors have mixed dimensions")
    return np.stack([d.values for d in descriptors])


def fit_znorm(descriptors: list[FrameDescriptor]) -> ZNormStats:
    """Population mean/stddev over a descriptor corpus, stddev floored.

    Needs at least two descriptors of uniform dimension.
    """
    if len(descriptors) < 2:
        raise ValueError(f"need >= 2 descriptors to fit stats, got {len(descriptors)}")
    data = stack_descriptors(descriptors)
    mean = data.mean(axis=0)
    std = np.maximum(data.std(axis=0), ZNORM_FLOOR)
    return ZNormStats(mean, std)


def apply_znorm(stats: ZNormStats, d: FrameDescriptor) -> FrameDescriptor:
    """Componentwise (d - mean) / stddev."""
    if d.values.shape[0] != stats.dimension:
        raise ValueError(
            f"descriptor dimension {d.values.shape[0]} != stats dimension {stats.dimension}"
        )
    return FrameDescriptor((d.values - stats.mean) / stats.stddev, d.variant, d.frame_index)


def apply_znorm_array(stats: ZNormStats, data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.shape[-1] != stats.dimension:
        raise ValueError(f"data dimension {data.shape[-1]} != stats dimension {stats.dimension}")
    return (data - stats.mean) / stats.stddev
