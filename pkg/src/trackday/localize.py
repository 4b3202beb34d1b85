"""Track localisation: a from-scratch MLP classifier over pooled mask
features, trained with Adam + cross-entropy during the practice period.

Three labelings share the one trainer: the 10 coarse track segments, N
nearest-keypoint sections (with an optional sequential transition filter),
and hand-labelled zones {0 high-speed, 1 moderate, 2 hard-braking approach}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import percept
from .driver import Driver, DriverConfig
from .sim import SimConfig, run_episode
from .track import NUM_COARSE_SEGMENTS, TrackDefinition, assign_section, assign_zone

MODEL_MAGIC = b"TDMLP1\n"
DEFAULT_HIDDEN = (512, 256)


@dataclass
class LabeledSample:
    features: np.ndarray
    label: int
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    learning_rate: float = 0.001
    batch_size: int = 64
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    rng_seed: int = 0
    balance_extra: int = 500

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0 or self.batch_size < 1:
            raise ValueError("learning_rate and batch_size must be positive")


class MlpModel:
    """Tanh input layer, two ReLU hidden layers, softmax output.

    Weight matrices are (fan_in, fan_out) float64; activations per layer are
    fixed by position: tanh, relu, ..., relu, softmax.
    """

    def __init__(self, feature_size: int, num_classes: int, hidden=DEFAULT_HIDDEN, rng=None):
        if num_classes < 2:
            raise ValueError("need at least 2 classes")
        sizes = [feature_size, feature_size, *hidden, num_classes]
        self.layer_sizes = sizes
        self.weights = []
        self.biases = []
        rng = rng or np.random.default_rng(0)
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def feature_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def num_classes(self) -> int:
        return self.layer_sizes[-1]

    def forward(self, x: np.ndarray, keep_intermediates: bool = False):
        """Class probabilities for a batch (n, feature_size) or single vector."""
        single = x.ndim == 1
        a = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if a.shape[1] != self.feature_size:
            raise ValueError(f"expected {self.feature_size} features, got {a.shape[1]}")
        pre, post = [], [a]
        n_layers = len(self.weights)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            if k == n_layers - 1:
                a = _softmax(z)
            elif k == 0:
                a = np.tanh(z)
            else:
                a = np.maximum(0.0, z)
            post.append(a)
        probs = a[0] if single else a
        if keep_intermediates:
            return probs, pre, post
        return probs

    def loss_and_gradients(self, x: np.ndarray, labels: np.ndarray):
        """Mean cross-entropy and its gradients w.r.t. every parameter."""
        probs, pre, post = self.forward(x, keep_intermediates=True)
        n = len(labels)
        logp = _log_softmax(pre[-1])
        loss = -float(np.mean(logp[np.arange(n), labels]))
        delta = probs.copy()
        delta[np.arange(n), labels] -= 1.0
        delta /= n
        grads_w, grads_b = [], []
        for k in range(len(self.weights) - 1, -1, -1):
            grads_w.append(post[k].T @ delta)
            grads_b.append(delta.sum(axis=0))
            if k > 0:
                delta = delta @ self.weights[k].T
                if k == 1:
                    delta *= 1.0 - np.tanh(pre[0]) ** 2
                else:
                    delta *= pre[k - 1] > 0.0
        return loss, grads_w[::-1], grads_b[::-1]

    def save(self, path) -> None:
        """Versioned binary dump; float64 round-trip is loss-free."""
        header = json.dumps({"layer_sizes": self.layer_sizes}).encode()
        with open(path, "wb") as fh:
            fh.write(MODEL_MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            for w, b in zip(self.weights, self.biases):
                fh.write(np.ascontiguousarray(w).tobytes())
                fh.write(np.ascontiguousarray(b).tobytes())

    @classmethod
    def load(cls, path) -> "MlpModel":
        with open(path, "rb") as fh:
            if fh.read(len(MODEL_MAGIC)) != MODEL_MAGIC:
                raise ValueError(f"{path}: not a trackday model file")
            (hlen,) = struct.unpack("<I", fh.read(4))
            sizes = json.loads(fh.read(hlen))["layer_sizes"]
            model = cls.__new__(cls)
            model.layer_sizes = sizes
            model.weights, model.biases = [], []
            for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
                w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype=np.float64).reshape(fan_in, fan_out)
                b = np.frombuffer(fh.read(8 * fan_out), dtype=np.float64)
                model.weights.append(w.copy())
                model.biases.append(b.copy())
        return model


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def mlp_forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    return model.forward(features)


def predict_zone(model: MlpModel, features: np.ndarray) -> int:
    """Argmax class; numpy argmax already breaks ties toward the lowest index."""
    return int(np.argmax(model.forward(features)))


def train_classifier(samples, config: TrainConfig, num_classes: int | None = None, hidden=DEFAULT_HIDDEN):
    """Mini-batch Adam on mean cross-entropy; deliberately overfits.

    ``samples`` is a list of :class:`LabeledSample` (or an (X, y) pair).
    Returns (model, per-epoch mean loss trace). Deterministic for a fixed
    ``rng_seed``.
    """
    if isinstance(samples, tuple):
        x, y = samples
    else:
        x = np.array([s.features for s in samples], dtype=np.float64)
        y = np.array([s.label for s in samples], dtype=np.int64)
    if len(x) == 0:
        raise ValueError("no training samples")
    n_classes = num_classes if num_classes is not None else int(y.max()) + 1
    if n_classes < 2:
        raise ValueError("cross-entropy training needs at least 2 classes")
    present = np.unique(y)
    missing = sorted(set(range(n_classes)) - set(present.tolist()))
    if missing:
        raise ValueError(f"no training samples for classes {missing}")

    rng = np.random.default_rng(config.rng_seed)
    model = MlpModel(x.shape[1], n_classes, hidden=hidden, rng=rng)
    m_w = [np.zeros_like(w) for w in model.weights]
    v_w = [np.zeros_like(w) for w in model.weights]
    m_b = [np.zeros_like(b) for b in model.biases]
    v_b = [np.zeros_like(b) for b in model.biases]
    trace = []
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(len(x))
        losses = []
        for start in range(0, len(x), config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, gw, gb = model.loss_and_gradients(x[batch], y[batch])
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite training loss at update {t}: {loss}")
            losses.append(loss)
            t += 1
            lr_t = config.learning_rate * np.sqrt(1 - config.beta2**t) / (1 - config.beta1**t)
            for params, grads, m, v in (
                (model.weights, gw, m_w, v_w),
                (model.biases, gb, m_b, v_b),
            ):
                for k, g in enumerate(grads):
                    m[k] = config.beta1 * m[k] + (1 - config.beta1) * g
                    v[k] = config.beta2 * v[k] + (1 - config.beta2) * g * g
                    params[k] -= lr_t * m[k] / (np.sqrt(v[k]) + config.eps)
        trace.append(float(np.mean(losses)))
    return model, trace


def balance_samples(samples: list, target_classes, extra: int, seed: int = 0) -> list:
    """Append ``extra`` resampled (with replacement) samples per target class."""
    out = list(samples)
    if extra == 0:
        return out
    rng = np.random.default_rng(seed)
    for cls in sorted(target_classes):
        pool = [s for s in samples if s.label == cls]
        if not pool:
            raise ValueError(f"cannot balance class {cls}: no samples collected for it")
        picks = rng.integers(0, len(pool), size=extra)
        out.extend(pool[i] for i in picks)
    return out


def transition_filter(current: int, predicted: int, n_sections: int) -> int:
    """Accept a section prediction only if it holds or advances by one."""
    if not (0 <= current < n_sections and 0 <= predicted < n_sections):
        raise ValueError("section indices must be < n_sections")
    if predicted == current or predicted == (current + 1) % n_sections:
        return predicted
    return current


def collect_practice_samples(
    track: TrackDefinition,
    sim_config: SimConfig,
    camera: percept.CameraModel,
    sample_budget: int,
    labeler: str = "zones",
    driver_config: DriverConfig | None = None,
    mask_noise: float = 0.0,
    frame_hook=None,
):
    """Drive the practice stack and record labelled feature vectors.

    The vehicle follows the estimated centerline at up to 10 m/s; at every
    step the pooled mask features are labelled from the vehicle's true
    position (zone box, nearest section keypoint, or coarse segment).
    """
    if labeler == "zones" and not track.zone_boxes:
        raise ValueError("track has no zone boxes; cannot collect zone labels")
    if labeler == "sections" and len(track.section_keypoints) == 0:
        raise ValueError("track has no section keypoints; cannot collect section labels")
    if labeler not in ("zones", "sections", "segment"):
        raise ValueError(f"unknown labeler {labeler!r}")

    driver_config = driver_config or DriverConfig()
    driver = Driver(driver_config, practice=True)
    samples: list[LabeledSample] = []

    def record(step_index, state, pose, obs, action, rec):
        if len(samples) >= sample_budget:
            return
        if frame_hook is not None:
            frame_hook(state, pose, obs)
        features = percept.pooled_features(obs.mask, driver_config.pool_h, driver_config.pool_w)
        if labeler == "zones":
            label = assign_zone(state.position, track.zone_boxes)
        elif labeler == "sections":
            label = assign_section(state.position, track.section_keypoints)
        else:
            label = pose.segment_index
        samples.append(
            LabeledSample(features=features, label=label, metadata={"position": state.position, "time": rec["t"]})
        )

    run_episode(
        driver,
        track,
        sim_config,
        camera=camera,
        mode="practice",
        max_steps=sample_budget,
        mask_noise=mask_noise,
        on_step=record,
    )
    return samples[:sample_budget]


def num_labels(track: TrackDefinition, labeler: str) -> int:
    if labeler == "zones":
        return 3
    if labeler == "sections":
        return len(track.section_keypoints)
    if labeler == "segment":
        return NUM_COARSE_SEGMENTS
    raise ValueError(f"unknown labeler {labeler!r}")


def zone_lookup(track: TrackDefinition, labeler: str) -> np.ndarray:
    """Map section/segment labels to the zone override classes.

    Sections map through their keypoint's zone box; coarse segments through
    the centerline point at the middle of their arclength bin.
    """
    if labeler == "sections":
        return np.array([assign_zone(kp, track.zone_boxes) for kp in track.section_keypoints], dtype=np.int64)
    if labeler == "segment":
        mids = [(k + 0.5) * track.total_length / NUM_COARSE_SEGMENTS for k in range(NUM_COARSE_SEGMENTS)]
        return np.array([assign_zone(track.point_at(s), track.zone_boxes) for s in mids], dtype=np.int64)
    raise ValueError("zone_lookup applies to section/segment labelers only")


class ZoneLocalizer:
    """Feature-vector to zone-label adapter handed to the racing driver.

    Wraps a trained classifier; for section/segment models the predicted
    label passes through the optional transition filter and is then mapped
    to a zone class.
    """

    def __init__(self, model: MlpModel, labeler: str = "zones", track: TrackDefinition | None = None,
                 use_transition_filter: bool | None = None):
        self.model = model
        self.labeler = labeler
        if use_transition_filter is None:
            use_transition_filter = labeler == "sections"
        self.use_transition_filter = use_transition_filter
        self.current = 0
        if labeler == "zones":
            self._lookup = None
        else:
            if track is None:
                raise ValueError("section/segment localizers need the track for the zone mapping")
            self._lookup = zone_lookup(track, labeler)

    def reset(self) -> None:
        self.current = 0

    def __call__(self, features: np.ndarray) -> int:
        label = predict_zone(self.model, features)
        if self._lookup is None:
            return label
        if self.use_transition_filter:
            label = transition_filter(self.current, label, self.model.num_classes)
            self.current = label
        return int(self._lookup[label])
