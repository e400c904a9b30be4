"""Planar-symmetric grasp rotations as (Bingham parameter, approach direction).

A grasp rotation ``R = [e_x e_y e_z]`` of a parallel-jaw gripper is
equivalent to ``R diag(1, -1, -1)``: the 180 degree turn about the approach
axis ``e_x``.  The 9-parameter representation stores

* ``a``: the packed symmetric matrix of a Bingham distribution whose
  antipodal mode is ``+-e_z``, and
* ``x``: an unnormalized estimate of ``e_x``,

so both members of a symmetric pair have the same target.  Baselines that
regress a rotation matrix (6 channels: e_x, e_z) or a quaternion instead
take the smaller of the losses against the two members.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import bingham2d
from .bingham2d import DEFAULT_QUAD, analyze, confidence, mode, nll_and_grad, nll_and_grad_batch
from .errors import DegenerateFrameError, InvalidArgumentError
from .mat3 import (
    check_rotation,
    gram_schmidt_rotation,
    gram_schmidt_rotation_batch,
    triu_adjoint,
    triu_unpack,
)

FLIP = np.diag([1.0, -1.0, -1.0])
# 180 degrees about the body x axis, (w, x, y, z)
Q_FLIP = np.array([0.0, 1.0, 0.0, 0.0])
CONFIDENCE_THRESHOLD = 15.0


@dataclass(frozen=True)
class PlanarSymRep:
    a: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64).reshape(-1)
        x = np.asarray(self.x, dtype=np.float64).reshape(-1)
        if a.shape != (6,) or x.shape != (3,):
            raise InvalidArgumentError("PlanarSymRep needs a of length 6 and x of length 3")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x))):
            raise InvalidArgumentError("PlanarSymRep entries must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "x", x)

    @property
    def vector(self):
        return np.concatenate([self.a, self.x])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=np.float64)
        return cls(v[:6], v[6:9])

    def to_json(self):
        return {"a": self.a.tolist(), "x": self.x.tolist()}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise InvalidArgumentError("representation JSON must be an object")
        for key, size in (("a", 6), ("x", 3)):
            val = obj.get(key)
            if not isinstance(val, list) or len(val) != size:
                raise InvalidArgumentError(f"field '{key}' must be a list of {size} numbers")
            if not all(isinstance(u, (int, float)) and not isinstance(u, bool) for u in val):
                raise InvalidArgumentError(f"field '{key}' must contain only numbers")
        return cls(obj["a"], obj["x"])


class GraspRotationPair(NamedTuple):
    primary: np.ndarray
    flipped: np.ndarray

    def to_json(self):
        return {
            "primary": {"matrix": self.primary.reshape(-1).tolist()},
            "flipped": {"matrix": self.flipped.reshape(-1).tolist()},
        }


def rotation_to_json(R):
    return {"matrix": np.asarray(R, dtype=np.float64).reshape(-1).tolist()}


def rotation_from_json(obj):
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise InvalidArgumentError("rotation JSON is missing field 'matrix'")
    m = obj["matrix"]
    if not isinstance(m, list) or len(m) != 9:
        raise InvalidArgumentError("field 'matrix' must be a list of 9 numbers")
    try:
        R = np.array(m, dtype=np.float64).reshape(3, 3)
    except (TypeError, ValueError):
        raise InvalidArgumentError("field 'matrix' must contain only numbers") from None
    return check_rotation(R, "matrix")


def flip_rotation(R):
    """The symmetric partner: e_x kept, e_y and e_z negated."""
    return np.asarray(R, dtype=np.float64) * np.array([1.0, -1.0, -1.0])


# ---------------------------------------------------------------------------
# Cosine helpers
# ---------------------------------------------------------------------------


def _cos_term(x, e):
    """1 - cos(x, e) and its gradient in x, for unit ``e``."""
    nx = np.linalg.norm(x)
    if nx < 1e-9:
        raise DegenerateFrameError("direction has (near) zero length")
    dot = x @ e
    val = 1.0 - dot / nx
    grad = x * dot / nx**3 - e / nx
    return val, grad


def cos_term_batch(x, e):
    nx = np.linalg.norm(x, axis=1)
    if np.any(nx < 1e-9):
        raise DegenerateFrameError("direction has (near) zero length")
    dot = np.sum(x * e, axis=1)
    val = 1.0 - dot / nx
    grad = x * (dot / nx**3)[:, None] - e / nx[:, None]
    return val, grad


# ---------------------------------------------------------------------------
# Our representation
# ---------------------------------------------------------------------------


class RepLoss(NamedTuple):
    value: float
    cos_term: float
    bnll_term: float
    grad: np.ndarray


def rep_loss_and_grad(rep, R_gt, cfg=DEFAULT_QUAD):
    """(1 - cos(x, e_x)) + BNLL(triu(a), e_z) and its gradient in (a, x)."""
    R = check_rotation(R_gt, "R_gt")
    cos_val, gx = _cos_term(rep.x, R[:, 0])
    res = nll_and_grad(triu_unpack(rep.a), R[:, 2], cfg)
    grad = np.concatenate([triu_adjoint(res.grad), gx])
    return RepLoss(cos_val + res.value, cos_val, res.value, grad)


def rep_loss(rep, R_gt, cfg=DEFAULT_QUAD):
    R = check_rotation(R_gt, "R_gt")
    cos_val, _ = _cos_term(rep.x, R[:, 0])
    return cos_val + bingham2d.nll(triu_unpack(rep.a), R[:, 2], cfg)


def rep_loss_grad(rep, R_gt, cfg=DEFAULT_QUAD):
    return rep_loss_and_grad(rep, R_gt, cfg).grad


def rep_loss_batch(out, ex, ez, cfg=DEFAULT_QUAD):
    """Per-row loss and gradient for raw outputs ``out`` of shape ``(n, 9)``.

    ``ex`` / ``ez`` are the target columns; no validation on this path.
    """
    cos_val, gx = cos_term_batch(out[:, 6:9], ex)
    val, G = nll_and_grad_batch(triu_unpack(out[:, :6]), ez, cfg)
    return cos_val + val, np.concatenate([triu_adjoint(G), gx], axis=1)


def reconstruct_mode(rep, cfg=DEFAULT_QUAD):
    """Rotation pair from the Bingham mode (as e_z) and ``x`` (as e_x)."""
    e_z = mode(analyze(triu_unpack(rep.a), cfg))
    primary = gram_schmidt_rotation(rep.x, e_z)
    return GraspRotationPair(primary, flip_rotation(primary))


def reconstruct_sampled(rep, n, seed=0, cfg=DEFAULT_QUAD):
    """``n`` rotations, each using one e_z drawn from the Bingham distribution."""
    dist = analyze(triu_unpack(rep.a), cfg)
    if np.linalg.norm(rep.x) <= 1e-9:
        raise DegenerateFrameError("x has (near) zero length")
    ez = bingham2d.sample(dist, n, seed).points
    return [gram_schmidt_rotation(rep.x, v) for v in ez]


def confidence_mask(rep, threshold=CONFIDENCE_THRESHOLD, cfg=DEFAULT_QUAD):
    """True when the eigenvalue-gap confidence reaches ``threshold``."""
    return confidence(analyze(triu_unpack(rep.a), cfg)) >= threshold


# ---------------------------------------------------------------------------
# Flip-min baselines
# ---------------------------------------------------------------------------


class FlipMinLoss(NamedTuple):
    value: float
    flipped: bool
    grad: np.ndarray


def flipmin_loss_rotmat_and_grad(pred_ex, pred_ez, R_gt):
    """min over {R_gt, flip(R_gt)} of (1 - cos e_x) + (1 - cos e_z); ties keep R_gt."""
    R = check_rotation(R_gt, "R_gt")
    pred_ex = np.asarray(pred_ex, dtype=np.float64)
    pred_ez = np.asarray(pred_ez, dtype=np.float64)
    best = None
    for flipped, G in ((False, R), (True, flip_rotation(R))):
        vx, gx = _cos_term(pred_ex, G[:, 0])
        vz, gz = _cos_term(pred_ez, G[:, 2])
        if best is None or vx + vz < best.value:
            best = FlipMinLoss(vx + vz, flipped, np.concatenate([gx, gz]))
    return best


def flipmin_loss_rotmat(pred_ex, pred_ez, R_gt):
    res = flipmin_loss_rotmat_and_grad(pred_ex, pred_ez, R_gt)
    return res.value, res.flipped


def flipmin_rotmat_batch(out, ex, ez):
    """Batched flip-min loss for ``(n, 6)`` outputs; returns (loss, grad, flipped)."""
    vx, gx = cos_term_batch(out[:, 0:3], ex)
    vz, gz = cos_term_batch(out[:, 3:6], ez)
    vz_f, gz_f = cos_term_batch(out[:, 3:6], -ez)
    # the flip keeps e_x, so only the e_z term differs between branches
    flipped = vz_f < vz
    val = vx + np.where(flipped, vz_f, vz)
    gz = np.where(flipped[:, None], gz_f, gz)
    return val, np.concatenate([gx, gz], axis=1), flipped


def quat_mul(p, q):
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ]
    )


def quat_mul_batch(p, q):
    pw, px, py, pz = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
    qw, qx, qy, qz = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=1,
    )


def _check_unit_quat(q, name):
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,) or not np.all(np.isfinite(q)) or abs(np.linalg.norm(q) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"{name} must be a unit quaternion (w, x, y, z)")
    return q


def flipmin_loss_quat(pred_q, q_gt):
    """min over {q_gt, q_gt * q_flip} of 1 - |<pred, g>|; ties keep q_gt."""
    p = _check_unit_quat(pred_q, "pred_q")
    g = _check_unit_quat(q_gt, "q_gt")
    d0 = 1.0 - abs(p @ g)
    d1 = 1.0 - abs(p @ quat_mul(g, Q_FLIP))
    return (d1, True) if d1 < d0 else (d0, False)


def flipmin_quat_batch(out, q_gt):
    """Flip-min quaternion loss on raw ``(n, 4)`` outputs (normalized inside)."""
    nq = np.linalg.norm(out, axis=1)
    if np.any(nq < 1e-9):
        raise DegenerateFrameError("quaternion output has (near) zero length")
    u = out / nq[:, None]
    g1 = quat_mul_batch(q_gt, np.broadcast_to(Q_FLIP, q_gt.shape))
    d0 = np.sum(u * q_gt, axis=1)
    d1 = np.sum(u * g1, axis=1)
    flipped = np.abs(d1) > np.abs(d0)
    dot = np.where(flipped, d1, d0)
    target = np.where(flipped[:, None], g1, q_gt)
    val = 1.0 - np.abs(dot)
    gu = -np.sign(dot)[:, None] * target
    # back through u = out / |out|
    grad = (gu - u * np.sum(gu * u, axis=1, keepdims=True)) / nq[:, None]
    return val, grad, flipped


def rotmat_from_output(out):
    """Gram-Schmidt frames from raw 6-channel (e_x, e_z) outputs."""
    return gram_schmidt_rotation_batch(out[:, 0:3], out[:, 3:6])


def angle_between_axes(u, v):
    """Angle in [0, pi/2] between the lines spanned by ``u`` and ``v``."""
    c = abs(float(np.dot(u, v))) / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, c))
