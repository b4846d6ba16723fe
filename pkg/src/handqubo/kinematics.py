"""Serial-chain kinematics with modified (proximal) Denavit-Hartenberg rows.

Every link transform is ``Rot_x(alpha_prev) @ Trans_x(a_prev) @ Rot_z(theta) @
Trans_z(d)``.  A row either binds one actuated joint (``theta = theta_offset +
q[joint]``) or carries the constant ``theta_offset``.  All joints are revolute.

The batched helpers (``fingertip_positions``, ``jacobians``,
``manipulabilities``) take an ``(N, n)`` array of configurations and are used by
grid sweeps; the scalar helpers wrap them for a single configuration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ChainError, DomainError, NumericalError

# det(J J^T) values in (-DET_CLAMP, 0) are treated as round-off.
DET_CLAMP = 1e-12


@dataclass(frozen=True)
class DhRow:
    alpha_prev: float
    a_prev: float
    d: float
    theta_offset: float = 0.0
    joint: Optional[int] = None

    def __post_init__(self):
        for name in ("alpha_prev", "a_prev", "d", "theta_offset"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"DH row field {name} is not finite")
        if self.joint is not None and self.joint < 0:
            raise ChainError(f"negative joint binding {self.joint}")


@dataclass(frozen=True)
class KinematicChain:
    """Ordered DH rows plus per-joint limits ``(min, max)`` in radians."""

    rows: tuple[DhRow, ...]
    joint_limits: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(
            self, "joint_limits", tuple((float(lo), float(hi)) for lo, hi in self.joint_limits)
        )
        if not self.rows:
            raise ChainError("chain has no rows")
        n = len(self.joint_limits)
        if n < 1:
            raise ChainError("chain has no actuated joints")
        bound = [row.joint for row in self.rows if row.joint is not None]
        for j in bound:
            if j >= n:
                raise ChainError(f"joint binding {j} out of range for {n} joints")
        if sorted(bound) != list(range(n)):
            raise ChainError(f"joints must each be bound exactly once, got bindings {bound}")
        for k, (lo, hi) in enumerate(self.joint_limits):
            if not lo <= hi:
                raise DomainError(f"joint {k} has min {lo} > max {hi}")

    @property
    def joint_count(self) -> int:
        return len(self.joint_limits)

    def prepend(self, row: DhRow) -> "KinematicChain":
        """Return a chain with a constant row placed in front of the base."""
        if row.joint is not None:
            raise ChainError("only constant rows can be prepended")
        return KinematicChain((row,) + self.rows, self.joint_limits)


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray
    translation: np.ndarray

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        return cls(np.array(m[:3, :3]), np.array(m[:3, 3]))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)


def _link_matrices(row: DhRow, theta: np.ndarray) -> np.ndarray:
    """Stack of ``(N, 4, 4)`` link transforms for the joint angles ``theta``."""
    ca, sa = math.cos(row.alpha_prev), math.sin(row.alpha_prev)
    ct, st = np.cos(theta), np.sin(theta)
    m = np.zeros(theta.shape + (4, 4))
    m[..., 0, 0] = ct
    m[..., 0, 1] = -st
    m[..., 0, 3] = row.a_prev
    m[..., 1, 0] = st * ca
    m[..., 1, 1] = ct * ca
    m[..., 1, 2] = -sa
    m[..., 1, 3] = -sa * row.d
    m[..., 2, 0] = st * sa
    m[..., 2, 1] = ct * sa
    m[..., 2, 2] = ca
    m[..., 2, 3] = ca * row.d
    m[..., 3, 3] = 1.0
    return m


def _row_angles(row: DhRow, qs: np.ndarray) -> np.ndarray:
    if row.joint is None:
        return np.full(qs.shape[0], row.theta_offset)
    if row.joint >= qs.shape[1]:
        raise ChainError(f"joint binding {row.joint} out of range for {qs.shape[1]} joint values")
    return row.theta_offset + qs[:, row.joint]


def dh_transform(row: DhRow, q: Sequence[float] = ()) -> Pose:
    qs = np.asarray(q, dtype=float).reshape(1, -1)
    return Pose.from_matrix(_link_matrices(row, _row_angles(row, qs))[0])


def _as_batch(chain: KinematicChain, qs) -> np.ndarray:
    qs = np.asarray(qs, dtype=float)
    if qs.ndim == 1:
        qs = qs.reshape(1, -1)
    if qs.ndim != 2 or qs.shape[1] != chain.joint_count:
        raise DomainError(
            f"expected configurations with {chain.joint_count} joint values, got shape {qs.shape}"
        )
    return qs


def check_limits(chain: KinematicChain, q: Sequence[float]) -> None:
    for k, (value, (lo, hi)) in enumerate(zip(q, chain.joint_limits)):
        if not lo <= value <= hi:
            raise DomainError(f"joint {k} value {value!r} outside limits [{lo!r}, {hi!r}]")


def chain_frames(chain: KinematicChain, qs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Compose the chain for a batch of configurations.

    Returns the base-to-tip transforms ``(N, 4, 4)`` together with the
    world-frame axis ``(N, n, 3)`` and origin ``(N, n, 3)`` of every actuated
    joint, indexed by joint number.
    """
    qs = _as_batch(chain, qs)
    n_cfg = qs.shape[0]
    t = np.broadcast_to(np.eye(4), (n_cfg, 4, 4)).copy()
    axes = np.empty((n_cfg, chain.joint_count, 3))
    origins = np.empty((n_cfg, chain.joint_count, 3))
    for row in chain.rows:
        if row.joint is None:
            t = t @ _link_matrices(row, np.array([row.theta_offset]))[0]
            continue
        t = t @ _link_matrices(row, _row_angles(row, qs))
        axes[:, row.joint] = t[:, :3, 2]
        origins[:, row.joint] = t[:, :3, 3]
    return t, axes, origins


def compose(chain: KinematicChain, q: Sequence[float]) -> Pose:
    t, _, _ = chain_frames(chain, q)
    return Pose.from_matrix(t[0])


def fingertip_positions(chain: KinematicChain, qs) -> np.ndarray:
    """Fingertip positions ``(N, 3)`` for a batch; limits are not checked."""
    t, _, _ = chain_frames(chain, qs)
    return t[:, :3, 3]


def forward_kinematics(chain: KinematicChain, q: Sequence[float], strict: bool = True) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.joint_count,):
        raise DomainError(f"expected {chain.joint_count} joint values, got {q.shape}")
    if strict:
        check_limits(chain, q)
    return fingertip_positions(chain, q)[0]


def jacobians(chain: KinematicChain, qs) -> np.ndarray:
    """Geometric position Jacobians ``(N, 3, n)``: column k is z_k x (p_e - p_k)."""
    t, axes, origins = chain_frames(chain, qs)
    tip = t[:, None, :3, 3]
    cols = np.cross(axes, tip - origins)
    return np.swapaxes(cols, 1, 2)


def position_jacobian(chain: KinematicChain, q: Sequence[float], strict: bool = True) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.joint_count,):
        raise DomainError(f"expected {chain.joint_count} joint values, got {q.shape}")
    if strict:
        check_limits(chain, q)
    return jacobians(chain, q)[0]


def manipulability_from_jacobians(jac: np.ndarray) -> np.ndarray:
    """sqrt(det(J J^T)) for a stack of 3 x n Jacobians, clamping round-off."""
    jac = np.asarray(jac, dtype=float)
    if jac.ndim == 2:
        jac = jac[None]
    if jac.shape[2] < 3:
        raise DomainError(f"manipulability needs at least 3 joints, got {jac.shape[2]}")
    det = np.linalg.det(jac @ np.swapaxes(jac, 1, 2))
    if det.size and det.min() <= -DET_CLAMP:
        raise NumericalError(f"det(J J^T) = {det.min()!r} is negative beyond round-off")
    return np.sqrt(np.maximum(det, 0.0))


def manipulabilities(chain: KinematicChain, qs) -> np.ndarray:
    if chain.joint_count < 3:
        raise DomainError(f"manipulability needs at least 3 joints, chain has {chain.joint_count}")
    return manipulability_from_jacobians(jacobians(chain, qs))


def manipulability(chain: KinematicChain, q: Sequence[float], strict: bool = True) -> float:
    if chain.joint_count < 3:
        raise DomainError(f"manipulability needs at least 3 joints, chain has {chain.joint_count}")
    return float(manipulability_from_jacobians(position_jacobian(chain, q, strict=strict))[0])


def global_manipulability(chain: KinematicChain, grid, chunk_size: int = 65536) -> float:
    """Mean manipulability over every configuration of ``grid``.

    The sum is exactly rounded (``math.fsum``), so the result does not depend on
    the chunk size or on how chunks are scheduled.
    """
    if grid.dimension != chain.joint_count:
        raise DomainError(
            f"grid has {grid.dimension} axes but the chain has {chain.joint_count} joints"
        )
    if grid.size == 0:
        raise DomainError("empty joint grid")
    partials: list[float] = []
    for qs in grid.chunks(chunk_size):
        partials.extend(manipulabilities(chain, qs).tolist())
    return math.fsum(partials) / grid.size
