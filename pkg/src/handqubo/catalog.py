"""The 27 robotic-hand design candidates and their kinematic chains.

Lengths are normalized so that the index finger (mount height plus three
phalanges) has unit length.  Frames follow the shared base frame: fingers point
along +y, the lateral (index-to-little) direction is +z and flexion curls the
fingertips towards +x, where the thumb sits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import DomainError
from .kinematics import DhRow, KinematicChain

PI = math.pi

FINGERS = ("thumb", "index", "middle", "ring", "little")
PREFIX = {"thumb": "t", "index": "i", "middle": "m", "ring": "r", "little": "l"}
FAMILY_SIZES = {"thumb": 7, "index": 2, "middle": 6, "ring": 4, "little": 8}

THUMB_RATIOS = ((1, 1, 1), (2, 1, 1), (1, 2, 1), (1, 1, 2), (2, 2, 1), (2, 1, 2), (1, 2, 2))

THUMB_LIMITS = ((0.0, PI / 2), (-PI / 2, 0.0), (-PI / 6, PI / 6), (-PI / 2, 0.0), (-PI / 2, 0.0))
PALM_MR_LIMITS = (0.0, PI / 9)
PALM_RL_LIMITS = (0.0, PI / 6)
ABDUCTION_LIMITS = (-PI / 12, PI / 12)
FIRST_FLEXION_LIMITS = (-PI / 2, PI / 9)
DISTAL_FLEXION_LIMITS = (-PI / 2, 0.0)

THREE_DOF_MODES = ("two_segment", "frozen_distal")


@dataclass(frozen=True)
class HandParameters:
    """Normalized kinematic parameters of the hand.

    ``three_dof_mode`` selects how a finger loses one flexion joint:
    ``"two_segment"`` rebuilds it with two phalanges ``l_2d1`` and ``l_2d2``;
    ``"frozen_distal"`` keeps the three phalanges and locks the distal joint
    fully extended.
    """

    d_a: float = 0.46
    l_3d1: float = 0.18
    l_3d2: float = 0.18
    l_3d3: float = 0.18
    l_2d1: float = 0.27
    l_2d2: float = 0.27
    l_t: float = 0.60
    l_t1: float = 0.10
    a_w: float = 0.18
    d_w_steps: tuple[float, ...] = (0.46, 0.51, 0.56)
    three_dof_mode: str = "two_segment"

    def __post_init__(self):
        object.__setattr__(self, "d_w_steps", tuple(float(v) for v in self.d_w_steps))
        for name in ("d_a", "l_3d1", "l_3d2", "l_3d3", "l_2d1", "l_2d2", "l_t", "l_t1", "a_w"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a positive length, got {value!r}")
        if abs(self.d_a + self.l_3d1 + self.l_3d2 + self.l_3d3 - 1.0) > 1e-12:
            raise DomainError("d_a + l_3d1 + l_3d2 + l_3d3 must equal 1")
        if abs(self.d_a + self.l_2d1 + self.l_2d2 - 1.0) > 1e-12:
            raise DomainError("d_a + l_2d1 + l_2d2 must equal 1")
        steps = self.d_w_steps
        if not steps or any(not v > 0 for v in steps):
            raise DomainError("d_w_steps must be non-empty positive heights")
        for lo, hi in zip(steps, steps[1:]):
            if abs(hi - lo - 0.05) > 1e-12:
                raise DomainError(f"d_w_steps must increase in steps of 0.05, got {steps}")
        if self.three_dof_mode not in THREE_DOF_MODES:
            raise DomainError(
                f"three_dof_mode must be one of {THREE_DOF_MODES}, got {self.three_dof_mode!r}"
            )

    @classmethod
    def from_dict(cls, data: dict) -> "HandParameters":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown hand parameter(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__} | {
            "d_w_steps": list(self.d_w_steps)
        }


@dataclass(frozen=True)
class DesignCandidate:
    id: str
    finger: str
    variant: int
    chain: KinematicChain
    palm_mr: bool = False
    palm_rl: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def dof_count(self) -> int:
        return self.chain.joint_count

    @property
    def palm_count(self) -> int:
        return int(self.palm_mr) + int(self.palm_rl)

    @property
    def finger_dof(self) -> int:
        """Actuated joints of the finger itself, palm joints excluded."""
        return self.dof_count - self.palm_count


@dataclass(frozen=True)
class Catalog:
    candidates: tuple[DesignCandidate, ...]
    parameters: HandParameters

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        ids = [c.id for c in self.candidates]
        if len(set(ids)) != len(ids):
            raise DomainError("candidate ids must be unique")

    def __getitem__(self, cid: str) -> DesignCandidate:
        for c in self.candidates:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def __iter__(self):
        return iter(self.candidates)

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def ids(self) -> list[str]:
        return [c.id for c in self.candidates]

    def family(self, finger: str) -> list[DesignCandidate]:
        return [c for c in self.candidates if c.finger == finger]


def thumb_segment_lengths(ratio: Iterable[int], l_t: float) -> tuple[float, float, float]:
    ratio = tuple(ratio)
    if len(ratio) != 3 or any(r <= 0 for r in ratio):
        raise DomainError(f"thumb ratio must be three positive entries, got {ratio}")
    if not l_t > 0:
        raise DomainError(f"thumb length must be positive, got {l_t!r}")
    total = sum(ratio)
    return tuple(l_t * r / total for r in ratio)


def thumb_chain(params: HandParameters, ratio: tuple[int, int, int]) -> KinematicChain:
    l_t2, l_t3, l_t4 = thumb_segment_lengths(ratio, params.l_t)
    rows = (
        DhRow(-PI / 3, 0.0, 0.0, 0.0, joint=0),
        DhRow(-PI / 2, params.l_t1, 0.0, 0.0, joint=1),
        DhRow(PI / 2, l_t2, 0.0, 0.0, joint=2),
        DhRow(-PI / 2, 0.0, 0.0, 0.0, joint=3),
        DhRow(0.0, l_t3, 0.0, 0.0, joint=4),
        DhRow(0.0, l_t4, 0.0, 0.0),
    )
    return KinematicChain(rows, THUMB_LIMITS)


def _phalanges(params: HandParameters, four_dof: bool, first: int) -> tuple[tuple[DhRow, ...], list]:
    """Rows for the flexion links after the first flexion joint."""
    if four_dof:
        rows = (
            DhRow(0.0, params.l_3d1, 0.0, 0.0, joint=first),
            DhRow(0.0, params.l_3d2, 0.0, 0.0, joint=first + 1),
            DhRow(0.0, params.l_3d3, 0.0, 0.0),
        )
        return rows, [DISTAL_FLEXION_LIMITS, DISTAL_FLEXION_LIMITS]
    if params.three_dof_mode == "frozen_distal":
        rows = (
            DhRow(0.0, params.l_3d1, 0.0, 0.0, joint=first),
            DhRow(0.0, params.l_3d2, 0.0, 0.0),
            DhRow(0.0, params.l_3d3, 0.0, 0.0),
        )
    else:
        rows = (
            DhRow(0.0, params.l_2d1, 0.0, 0.0, joint=first),
            DhRow(0.0, params.l_2d2, 0.0, 0.0),
        )
    return rows, [DISTAL_FLEXION_LIMITS]


def finger_chain(params: HandParameters, lateral: float, mount: float, four_dof: bool) -> KinematicChain:
    """Finger without palm joints, mounted ``lateral`` along z at height ``mount``."""
    head = (
        DhRow(0.0, 0.0, lateral, PI / 2),
        DhRow(PI / 2, mount, 0.0, 0.0, joint=0),
        DhRow(-PI / 2, 0.0, 0.0, 0.0, joint=1),
    )
    tail, tail_limits = _phalanges(params, four_dof, first=2)
    return KinematicChain(head + tail, [ABDUCTION_LIMITS, FIRST_FLEXION_LIMITS] + tail_limits)


def palm_finger_chain(
    params: HandParameters, finger: str, palm_mr: bool, palm_rl: bool, four_dof: bool
) -> KinematicChain:
    """Ring or little finger routed through the palm pivots.

    The lateral legs run 1.5 a_w to the middle-ring pivot, then a_w to the
    ring-little pivot, then 0.5 a_w to the finger base.  A pivot that is not
    present becomes a constant zero angle; the ring finger stops after the first
    pivot with a 0.5 a_w leg.
    """
    a_w = params.a_w
    rows = [DhRow(-PI / 2, 0.0, 0.0, -PI / 2)]
    limits = []

    def pivot(leg, present, lim):
        if present:
            rows.append(DhRow(0.0, leg, 0.0, 0.0, joint=len(limits)))
            limits.append(lim)
        else:
            rows.append(DhRow(0.0, leg, 0.0, 0.0))

    pivot(1.5 * a_w, palm_mr, PALM_MR_LIMITS)
    if finger == "little":
        pivot(a_w, palm_rl, PALM_RL_LIMITS)
    elif palm_rl:
        raise DomainError("only the little finger carries the ring-little palm joint")
    rows.append(DhRow(0.0, 0.5 * a_w, params.d_a, 0.0))
    first = len(limits)
    rows.append(DhRow(-PI / 2, 0.0, 0.0, -PI / 2, joint=first))
    rows.append(DhRow(-PI / 2, 0.0, 0.0, 0.0, joint=first + 1))
    limits += [ABDUCTION_LIMITS, FIRST_FLEXION_LIMITS]
    tail, tail_limits = _phalanges(params, four_dof, first=first + 2)
    return KinematicChain(tuple(rows) + tail, limits + tail_limits)


def _candidate(finger, variant, chain, palm_mr=False, palm_rl=False, **meta):
    return DesignCandidate(
        id=f"{PREFIX[finger]}{variant}",
        finger=finger,
        variant=variant,
        chain=chain,
        palm_mr=palm_mr,
        palm_rl=palm_rl,
        meta=meta,
    )


def build_catalog(params: Optional[HandParameters] = None) -> Catalog:
    params = params or HandParameters()
    a_w, d_a = params.a_w, params.d_a
    out = []
    for v, ratio in enumerate(THUMB_RATIOS, start=1):
        out.append(_candidate("thumb", v, thumb_chain(params, ratio), ratio=":".join(map(str, ratio))))

    for v, four in enumerate((True, False), start=1):
        out.append(_candidate("index", v, finger_chain(params, 0.0, d_a, four), joints="4-DoF" if four else "3-DoF"))

    v = 1
    for d_w in params.d_w_steps:
        for four in (True, False):
            out.append(_candidate("middle", v, finger_chain(params, a_w, d_w, four),
                                  d_w=d_w, joints="4-DoF" if four else "3-DoF"))
            v += 1

    for v, (palm, four) in enumerate(((False, True), (False, False), (True, True), (True, False)), 1):
        chain = (palm_finger_chain(params, "ring", True, False, four) if palm
                 else finger_chain(params, 2 * a_w, d_a, four))
        out.append(_candidate("ring", v, chain, palm_mr=palm, joints="4-DoF" if four else "3-DoF"))

    little = ((False, False), (True, False), (False, True), (True, True))
    v = 1
    for mr, rl in little:
        for four in (True, False):
            chain = (palm_finger_chain(params, "little", mr, rl, four) if (mr or rl)
                     else finger_chain(params, 3 * a_w, d_a, four))
            out.append(_candidate("little", v, chain, palm_mr=mr, palm_rl=rl, joints="4-DoF" if four else "3-DoF"))
            v += 1
    return Catalog(tuple(out), params)


RING_PALM_MR = {1: False, 2: False, 3: True, 4: True}
LITTLE_PALM_MR = {1: False, 2: False, 3: True, 4: True, 5: False, 6: False, 7: True, 8: True}


def compatibility(ring_variant: int, little_variant: int) -> bool:
    """True when the ring and little designs agree on the middle-ring palm joint."""
    if ring_variant not in RING_PALM_MR:
        raise DomainError(f"ring variant must be 1-4, got {ring_variant!r}")
    if little_variant not in LITTLE_PALM_MR:
        raise DomainError(f"little variant must be 1-8, got {little_variant!r}")
    return RING_PALM_MR[ring_variant] == LITTLE_PALM_MR[little_variant]


def incompatible_pairs() -> list[tuple[int, int]]:
    return [(r, l) for r in RING_PALM_MR for l in LITTLE_PALM_MR if not compatibility(r, l)]
