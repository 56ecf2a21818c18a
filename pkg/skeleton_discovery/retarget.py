"""Motion transfer between skeletons that share one topology."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from skeleton_discovery.errors import RetargetError
from skeleton_discovery.kinematics.fk import motion_joints
from skeleton_discovery.types import KeypointTracks, MotionSequence, SkeletonTree


def topology_mismatch(source: SkeletonTree, target: SkeletonTree) -> str | None:
    """Describe the first topology difference, or ``None`` when they match."""
    if source.K != target.K:
        return f"source has {source.K} joints, target has {target.K}"
    if source.root != target.root:
        return f"root is {source.root} in source and {target.root} in target"
    for index, (src, tar) in enumerate(zip(source.parents, target.parents)):
        if src != tar:
            return f"parents[{index}] is {int(src)} in source and {int(tar)} in target"
    return None


@dataclass(frozen=True, eq=False)
class RetargetPair:
    """A source motion and the skeleton it should be replayed on."""

    source: SkeletonTree
    motion: MotionSequence
    target: SkeletonTree

    def __post_init__(self) -> None:
        if self.motion.skeleton.K != self.source.K:
            raise RetargetError("motion does not belong to the source skeleton")
        problem = topology_mismatch(self.source, self.target)
        if problem is not None:
            raise RetargetError(f"topology mismatch: {problem}")


def retarget_offsets(pair: RetargetPair) -> np.ndarray:
    """Source unit offsets scaled to the target's bone lengths."""
    return pair.source.unit_offsets * pair.target.bone_lengths[:, None]


def retarget_skeleton(pair: RetargetPair) -> SkeletonTree:
    """The target topology carrying the source orientations and target lengths."""
    return SkeletonTree(
        root=pair.target.root,
        parents=pair.target.parents,
        unit_offsets=pair.source.unit_offsets,
        offsets=retarget_offsets(pair),
        intensities=pair.target.intensities,
    )


def retarget_motion(pair: RetargetPair) -> KeypointTracks:
    """Replay the source rotations and root translation with target offsets.

    Root translation is copied verbatim; no root-scale adaptation happens.
    """
    joints = motion_joints(pair.motion, offsets=retarget_offsets(pair))
    return KeypointTracks(mu=joints, alpha=np.clip(pair.motion.intensities, 0.0, 1.0))


def retarget_sequence(pair: RetargetPair) -> MotionSequence:
    """The source motion re-expressed on :func:`retarget_skeleton`."""
    return MotionSequence(
        skeleton=retarget_skeleton(pair),
        root_translations=pair.motion.root_translations,
        rotations_6d=pair.motion.rotations_6d,
        intensities=pair.motion.intensities,
    )
