"""Synthetic top-down grasp-rotation fields over a planar workspace.

A scene is a square grid of cells.  Cells over the long box accept exactly
two rotations (closing direction e_z = +y or -y, approach e_x = -z); cells
near the center of the flat cylinder accept any yaw about z.  A tiny tanh
MLP maps cell coordinates to a rotation output and is trained with full
batch gradient descent under one of three representations:

* ``ours``: 9 outputs (packed Bingham parameter, approach direction);
* ``rotmat``: 6 outputs (e_x, e_z), flip-min cosine loss;
* ``quat``: 4 outputs, flip-min quaternion distance.

The resulting fields are scored for consistency along the box's symmetric
axis and, for ``ours``, for the eigenvalue-gap confidence per region.
"""
import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bingham2d import DEFAULT_QUAD, make_rng
from .errors import ConfigurationError
from .mat3 import eig_sym3_batch, quat_to_matrix_batch, triu_unpack
from .symrep import (
    cos_term_batch,
    flipmin_quat_batch,
    flipmin_rotmat_batch,
    quat_mul_batch,
    rep_loss_batch,
    rotmat_from_output,
)

KINDS = {"ours": 9, "rotmat": 6, "quat": 4}
EMPTY, PAIR, YAW_FREE = 0, 1, 2
INTERMEDIATE_COS = math.cos(math.radians(30.0))
APPROACH = np.array([0.0, 0.0, -1.0])
# rotation with e_x = -z, e_z = +y; yawing it about world z spans every label
_Q_BASE = np.array([0.5, -0.5, 0.5, 0.5])


@dataclass(frozen=True)
class BoxSpec:
    center: tuple = (0.0, 0.0)
    size: tuple = (0.2, 0.06)  # long axis along x, gripper closes along y


@dataclass(frozen=True)
class CylinderSpec:
    center: tuple = (0.0, 0.06)
    diameter: float = 0.07
    center_radius: float = 0.015


@dataclass(frozen=True)
class SceneConfig:
    workspace: float = 0.3
    resolution: int = 40
    box: Optional[BoxSpec] = field(default_factory=BoxSpec)
    cylinder: Optional[CylinderSpec] = None

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigurationError("scene config must be a JSON object")
        unknown = set(obj) - {"workspace", "resolution", "box", "cylinder"}
        if unknown:
            raise ConfigurationError(f"unknown scene field(s): {sorted(unknown)}")
        kw = {}
        if "workspace" in obj:
            kw["workspace"] = _num(obj["workspace"], "workspace")
        if "resolution" in obj:
            res = obj["resolution"]
            if not isinstance(res, int) or isinstance(res, bool):
                raise ConfigurationError("field 'resolution' must be an integer")
            kw["resolution"] = res
        box = obj["box"] if "box" in obj else {}
        cyl = obj.get("cylinder")
        for name, part in (("box", box), ("cylinder", cyl)):
            if part is not None and not isinstance(part, dict):
                raise ConfigurationError(f"field '{name}' must be an object or null")
        kw["box"] = None if box is None else BoxSpec(
            center=_pair(box.get("center", BoxSpec.center), "box.center"),
            size=_pair(box.get("size", BoxSpec.size), "box.size"),
        )
        kw["cylinder"] = None if cyl is None else CylinderSpec(
            center=_pair(cyl.get("center", CylinderSpec.center), "cylinder.center"),
            diameter=_num(cyl.get("diameter", CylinderSpec.diameter), "cylinder.diameter"),
            center_radius=_num(cyl.get("center_radius", CylinderSpec.center_radius), "cylinder.center_radius"),
        )
        return cls(**kw)

    def to_json(self):
        return {
            "workspace": self.workspace,
            "resolution": self.resolution,
            "box": None if self.box is None else {"center": list(self.box.center), "size": list(self.box.size)},
            "cylinder": None
            if self.cylinder is None
            else {
                "center": list(self.cylinder.center),
                "diameter": self.cylinder.diameter,
                "center_radius": self.cylinder.center_radius,
            },
        }


def _num(v, name):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigurationError(f"field '{name}' must be a finite number")
    return float(v)


def _pair(v, name):
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigurationError(f"field '{name}' must be a list of 2 numbers")
    return (_num(v[0], name), _num(v[1], name))


BOX_SCENE = SceneConfig()
BOX_CYLINDER_SCENE = SceneConfig(
    box=BoxSpec(center=(0.0, -0.04), size=(0.2, 0.04)),
    cylinder=CylinderSpec(center=(0.0, 0.05), diameter=0.07, center_radius=0.015),
)


@dataclass
class FieldScene:
    config: SceneConfig
    centers: np.ndarray  # (res, res, 2) cell centers, meters
    label: np.ndarray  # (res, res) EMPTY / PAIR / YAW_FREE

    @property
    def labeled(self):
        """Flat indices (row-major over the grid) of labeled cells."""
        return np.flatnonzero(self.label.reshape(-1) != EMPTY)

    def cells(self, kind):
        return np.flatnonzero(self.label.reshape(-1) == kind)


def gen_scene(config=BOX_SCENE):
    """Grid of cell centers and per-cell labels for ``config``."""
    ws, res = config.workspace, config.resolution
    if not ws > 0 or res < 2:
        raise ConfigurationError("workspace must be positive and resolution >= 2")
    if config.box is None and config.cylinder is None:
        raise ConfigurationError("scene needs a box or a cylinder")
    box, cyl = config.box, config.cylinder
    if box is not None and not (box.size[0] > 0 and box.size[1] > 0):
        raise ConfigurationError("box size must be positive")
    if cyl is not None and not (cyl.diameter > 0 and 0 <= cyl.center_radius <= cyl.diameter / 2):
        raise ConfigurationError("cylinder needs diameter > 0 and 0 <= center_radius <= diameter/2")
    if box is not None and cyl is not None:
        half = np.array(box.size) / 2
        d = np.abs(np.array(cyl.center) - np.array(box.center))
        gap = np.linalg.norm(np.maximum(d - half, 0.0))
        if gap < cyl.diameter / 2:
            raise ConfigurationError("box and cylinder footprints overlap")
    coords = (np.arange(res) + 0.5) * ws / res - ws / 2
    gx, gy = np.meshgrid(coords, coords, indexing="ij")
    centers = np.stack([gx, gy], axis=-1)
    label = np.full((res, res), EMPTY, dtype=np.int8)
    if box is not None:
        inside = (np.abs(gx - box.center[0]) <= box.size[0] / 2) & (np.abs(gy - box.center[1]) <= box.size[1] / 2)
        label[inside] = PAIR
    if cyl is not None:
        r = np.hypot(gx - cyl.center[0], gy - cyl.center[1])
        label[r <= cyl.center_radius] = YAW_FREE
    return FieldScene(config, centers, label)


# ---------------------------------------------------------------------------
# Tiny MLP with hand-written backprop
# ---------------------------------------------------------------------------


@dataclass
class TinyModel:
    kind: str
    weights: list  # [W1, b1, W2, b2, W3, b3]

    @classmethod
    def init(cls, kind, rng, hidden=32, input_gain=1.0):
        if kind not in KINDS:
            raise ConfigurationError(f"unknown representation kind {kind!r}")
        sizes = [2, hidden, hidden, KINDS[kind]]
        gains = [input_gain, 1.0, 1.0]
        weights = []
        for (fan_in, fan_out), gain in zip(zip(sizes[:-1], sizes[1:]), gains):
            weights.append(rng.standard_normal((fan_in, fan_out)) * gain / math.sqrt(fan_in))
            weights.append(np.zeros(fan_out))
        return cls(kind, weights)

    def forward(self, X):
        W1, b1, W2, b2, W3, b3 = self.weights
        h1 = np.tanh(X @ W1 + b1)
        h2 = np.tanh(h1 @ W2 + b2)
        return h2 @ W3 + b3, (X, h1, h2)

    def backward(self, cache, dout):
        X, h1, h2 = cache
        W1, b1, W2, b2, W3, b3 = self.weights
        dW3 = h2.T @ dout
        db3 = dout.sum(axis=0)
        dz2 = (dout @ W3.T) * (1.0 - h2 * h2)
        dW2 = h1.T @ dz2
        db2 = dz2.sum(axis=0)
        dz1 = (dz2 @ W2.T) * (1.0 - h1 * h1)
        dW1 = X.T @ dz1
        db1 = dz1.sum(axis=0)
        return [dW1, db1, dW2, db2, dW3, db3]

    def to_json(self):
        return {"kind": self.kind, "weights": [w.tolist() for w in self.weights]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or obj.get("kind") not in KINDS:
            raise ConfigurationError("field 'kind' must be one of " + ", ".join(KINDS))
        ws = obj.get("weights")
        if not isinstance(ws, list) or len(ws) != 6:
            raise ConfigurationError("field 'weights' must hold 6 arrays")
        try:
            weights = [np.array(w, dtype=np.float64) for w in ws]
        except (TypeError, ValueError):
            raise ConfigurationError("field 'weights' must contain only numbers") from None
        out = KINDS[obj["kind"]]
        W1, b1, W2, b2, W3, b3 = weights
        hidden = b1.shape[0] if b1.ndim == 1 else -1
        ok = (
            W1.shape == (2, hidden)
            and W2.shape == (hidden, hidden)
            and b2.shape == (hidden,)
            and W3.shape == (hidden, out)
            and b3.shape == (out,)
        )
        if not ok:
            raise ConfigurationError("field 'weights' has inconsistent layer shapes")
        if not all(np.all(np.isfinite(w)) for w in weights):
            raise ConfigurationError("field 'weights' must be finite")
        return cls(obj["kind"], weights)


def _inputs(scene, idx):
    return scene.centers.reshape(-1, 2)[idx] / (scene.config.workspace / 2)


def _yaw_quat(psi):
    half = 0.5 * psi
    qz = np.stack([np.cos(half), np.zeros_like(half), np.zeros_like(half), np.sin(half)], axis=1)
    return quat_mul_batch(qz, np.broadcast_to(_Q_BASE, qz.shape))


def _targets(psi):
    """(e_x, e_z, quaternion) for yaw angles ``psi`` about world z."""
    n = psi.shape[0]
    ex = np.broadcast_to(APPROACH, (n, 3)).copy()
    ez = np.stack([-np.sin(psi), np.cos(psi), np.zeros(n)], axis=1)
    return ex, ez, _yaw_quat(psi)


def loss_and_grad(kind, out, psi, cfg=DEFAULT_QUAD):
    """Per-cell loss and d loss / d out for raw outputs against yaw labels ``psi``."""
    ex, ez, q = _targets(psi)
    if kind == "ours":
        return rep_loss_batch(out, ex, ez, cfg)
    if kind == "rotmat":
        val, grad, _ = flipmin_rotmat_batch(out, ex, ez)
        return val, grad
    if kind == "quat":
        val, grad, _ = flipmin_quat_batch(out, q)
        return val, grad
    raise ConfigurationError(f"unknown representation kind {kind!r}")


def plain_rotmat_loss_and_grad(out, psi):
    """Single-target cosine regression, no flip-min (sanity baseline)."""
    ex, ez, _ = _targets(psi)
    vx, gx = cos_term_batch(out[:, 0:3], ex)
    vz, gz = cos_term_batch(out[:, 3:6], ez)
    return vx + vz, np.concatenate([gx, gz], axis=1)


@dataclass
class TrainResult:
    model: TinyModel
    losses: list


def train_toy(
    scene,
    kind,
    epochs=2000,
    seed=0,
    lr=1e-2,
    alternate=True,
    flipmin=True,
    input_gain=1.0,
    cfg=DEFAULT_QUAD,
):
    """Full-batch gradient descent on every labeled cell.

    Box cells draw their label sign per epoch: it alternates between
    epochs with a per-cell random phase (or stays +y when ``alternate`` is
    False).  Yaw-free cells draw a uniform yaw each epoch.  ``flipmin=False``
    trains the rotation-matrix output against the drawn label only.
    """
    if kind not in KINDS:
        raise ConfigurationError(f"unknown representation kind {kind!r}")
    idx = scene.labeled
    if idx.size == 0:
        raise ConfigurationError("scene has no labeled cells")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = make_rng(ss)
    model = TinyModel.init(kind, rng, input_gain=input_gain)
    X = _inputs(scene, idx)
    cell_label = scene.label.reshape(-1)[idx]
    pair = cell_label == PAIR
    yaw_free = cell_label == YAW_FREE
    phase = rng.integers(0, 2, size=idx.size)
    n = idx.size
    losses = []
    for epoch in range(epochs):
        psi = np.zeros(n)
        if alternate:
            psi[pair] = np.pi * ((epoch + phase[pair]) % 2)
        psi[yaw_free] = rng.uniform(0.0, 2.0 * np.pi, size=int(yaw_free.sum()))
        out, cache = model.forward(X)
        if kind == "rotmat" and not flipmin:
            val, dout = plain_rotmat_loss_and_grad(out, psi)
        else:
            val, dout = loss_and_grad(kind, out, psi, cfg)
        losses.append(float(val.mean()))
        grads = model.backward(cache, dout / n)
        for w, g in zip(model.weights, grads):
            w -= lr * g
    return TrainResult(model, losses)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class ConsistencyReport:
    axis_alignment: float
    neighbor_coherence: float
    intermediate_fraction: float
    box_confidence: Optional[float] = None
    cylinder_center_confidence: Optional[float] = None

    def to_json(self):
        return dict(self.__dict__)


def predict_field(model, scene, cfg=DEFAULT_QUAD):
    """(labeled cell indices, e_z per cell, confidence per cell or None)."""
    idx = scene.labeled
    out, _ = model.forward(_inputs(scene, idx))
    conf = None
    if model.kind == "ours":
        lam, D = eig_sym3_batch(triu_unpack(out[:, :6]))
        ez = D[:, :, 2]
        conf = 2.0 * lam[:, 2] - lam[:, 1] - lam[:, 0]
    elif model.kind == "rotmat":
        ez = rotmat_from_output(out)[:, :, 2]
    else:
        q = out / np.linalg.norm(out, axis=1, keepdims=True)
        ez = quat_to_matrix_batch(q)[:, :, 2]
    return idx, ez, conf


def consistency_from_field(scene, idx, ez, conf=None):
    """Scores a field of e_z vectors given on the labeled cells ``idx``."""
    res = scene.config.resolution
    lab = scene.label.reshape(-1)
    ez_grid = np.full((res * res, 3), np.nan)
    ez_grid[idx] = ez / np.linalg.norm(ez, axis=1, keepdims=True)
    box = np.flatnonzero(lab == PAIR)
    if box.size == 0:
        align = coher = inter = math.nan
    else:
        yabs = np.abs(ez_grid[box, 1])
        align = float(yabs.mean())
        inter = float(np.mean(yabs < INTERMEDIATE_COS))
        g = ez_grid.reshape(res, res, 3)
        is_box = (lab == PAIR).reshape(res, res)
        dots = []
        for a, b, m in (
            (g[1:, :], g[:-1, :], is_box[1:, :] & is_box[:-1, :]),
            (g[:, 1:], g[:, :-1], is_box[:, 1:] & is_box[:, :-1]),
        ):
            dots.append(np.abs(np.sum(a[m] * b[m], axis=1)))
        dots = np.concatenate(dots)
        coher = float(dots.mean()) if dots.size else math.nan
    box_conf = cyl_conf = None
    if conf is not None:
        conf_grid = np.full(res * res, np.nan)
        conf_grid[idx] = conf
        if box.size:
            box_conf = float(conf_grid[box].mean())
        cyl = np.flatnonzero(lab == YAW_FREE)
        if cyl.size:
            cyl_conf = float(conf_grid[cyl].mean())
    return ConsistencyReport(align, coher, inter, box_conf, cyl_conf)


def evaluate_field(model, scene, cfg=DEFAULT_QUAD):
    idx, ez, conf = predict_field(model, scene, cfg)
    return consistency_from_field(scene, idx, ez, conf)


def write_field_csv(fh, model, scene, cfg=DEFAULT_QUAD):
    """One row per labeled cell: ``cx,cy,ezx,ezy,ezz,confidence``."""
    idx, ez, conf = predict_field(model, scene, cfg)
    centers = scene.centers.reshape(-1, 2)[idx]
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["cx", "cy", "ezx", "ezy", "ezz", "confidence"])
    for k in range(idx.size):
        c = math.nan if conf is None else float(conf[k])
        writer.writerow([repr(float(centers[k, 0])), repr(float(centers[k, 1]))] + [repr(float(u)) for u in ez[k]] + [repr(c)])
