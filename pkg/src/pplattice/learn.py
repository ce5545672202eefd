"""Linear readout training for reservoir-computing tasks.

Two tasks share the same machinery: three-way classification of the injected
state (cat / squeezed vacuum / coherent) through a softmax readout trained
with categorical cross-entropy, and regression of the complex squeezing
parameter zeta = r exp(2i theta) through a two-output linear readout trained
with mean-squared error.  Both are optimized with Adam, written out here
explicitly so training is bit-reproducible given (dataset, hyperparameters,
seed).

Features are z-score standardized with train-split statistics before
training; the normalization vectors are stored in the model artifact so
inference applies the identical transform.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .dynamics import Schedule, run_ensemble, _seed_base
from .errors import ConfigError, DivergenceError
from .model import ReservoirSpec
from .observables import FeatureRecord, feature_vector, steady_occupations
from .sampler import StateSpec, sample_state

CLASS_NAMES = ("cat", "squeezed_vacuum", "coherent")
FLAG_DIVERGENCE_FRACTION = 0.10

# Reference accuracies for the three-class task: uniform guessing, and the
# readout that separates squeezed states but lumps cat with coherent.
BASELINE_UNIFORM_ACCURACY = 1.0 / 3.0
BASELINE_PAIR_CONFUSED_ACCURACY = 0.66

# Input-state parameter ranges for the two tasks.  Classification draws the
# magnitude and phase of each class from uniform windows chosen so the mean
# photon numbers of the three classes overlap; regression reuses the squeezed
# window and predicts zeta = r exp(2i theta).
CAT_BETA_RANGE = (1.12, 1.38)
COHERENT_BETA_RANGE = (1.03, 1.34)
SQUEEZED_R_RANGE = (0.9, 1.1)
PHASE_RANGE = (0.0, math.pi / 2.0)


@dataclass(frozen=True)
class Hyperparams:
    """Adam settings; batch_size None means full batch."""

    learning_rate: float = 5e-4
    epochs: int = 10_000
    batch_size: int | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")


CLASSIFY_HYPERPARAMS = Hyperparams(learning_rate=5e-4, epochs=10_000, batch_size=None)
REGRESS_HYPERPARAMS = Hyperparams(learning_rate=5e-4, epochs=25_000, batch_size=150)
FULL_TRAIN_PER_CLASS = 200
FULL_TEST_PER_CLASS = 50


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, max-shifted for stability."""
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ConfigError("softmax input must be finite")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, one_hot: np.ndarray) -> float:
    """Mean negative log-likelihood of the true classes."""
    p = np.clip(np.asarray(probs, dtype=float), 1e-12, None)
    y = np.asarray(one_hot, dtype=float)
    if p.shape != y.shape:
        raise ConfigError(f"probs shape {p.shape} does not match labels {y.shape}")
    return float(-(y * np.log(p)).sum() / y.shape[0])


def classifier_loss_and_grad(weights, bias, features, one_hot):
    """Cross-entropy loss and its gradients for a softmax readout."""
    n = features.shape[0]
    probs = softmax(features @ weights.T + bias)
    loss = cross_entropy(probs, one_hot)
    delta = (probs - one_hot) / n
    return loss, delta.T @ features, delta.sum(axis=0)


def regressor_loss_and_grad(weights, bias, features, targets_2d):
    """Squared-error loss |zeta - prediction|^2 averaged over records."""
    n = features.shape[0]
    pred = features @ weights.T + bias
    resid = pred - targets_2d
    loss = float((resid ** 2).sum() / n)
    delta = 2.0 * resid / n
    return loss, delta.T @ features, delta.sum(axis=0)


@dataclass(frozen=True, eq=False)
class ReadoutModel:
    """Trained linear readout plus the feature transform it was trained with."""

    kind: str                          # "classify" or "regress"
    weights: np.ndarray                # (outputs, features)
    bias: np.ndarray                   # (outputs,)
    feature_mean: np.ndarray           # (features,)
    feature_std: np.ndarray            # (features,)
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("classify", "regress"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        w = self.weights
        if w.ndim != 2 or self.bias.shape != (w.shape[0],):
            raise ConfigError("weights must be (outputs, features) with matching bias")
        if self.feature_mean.shape != (w.shape[1],) or self.feature_std.shape != (w.shape[1],):
            raise ConfigError("feature normalization vectors must match feature count")
        for arr in (w, self.bias, self.feature_mean, self.feature_std):
            if not np.all(np.isfinite(arr)):
                raise ConfigError("model parameters must be finite")
        if self.kind == "classify" and len(self.classes) != w.shape[0]:
            raise ConfigError("classifier needs one class name per output row")

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=float) - self.feature_mean) / self.feature_std

    def logits(self, features: np.ndarray) -> np.ndarray:
        return self.transform(features) @ self.weights.T + self.bias

    def predict_class(self, features: np.ndarray) -> np.ndarray:
        """Class indices for a (n, features) matrix."""
        return np.argmax(self.logits(features), axis=-1)

    def predict_complex(self, features: np.ndarray) -> np.ndarray:
        out = self.logits(features)
        return out[..., 0] + 1j * out[..., 1]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "weights": [[float(v) for v in row] for row in self.weights],
            "bias": [float(v) for v in self.bias],
            "feature_mean": [float(v) for v in self.feature_mean],
            "feature_std": [float(v) for v in self.feature_std],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReadoutModel":
        try:
            return cls(kind=data["kind"],
                       weights=np.asarray(data["weights"], dtype=float),
                       bias=np.asarray(data["bias"], dtype=float),
                       feature_mean=np.asarray(data["feature_mean"], dtype=float),
                       feature_std=np.asarray(data["feature_std"], dtype=float),
                       classes=tuple(data.get("classes", ())))
        except KeyError as exc:
            raise ConfigError(f"model artifact missing field {exc}") from None

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


def load_model(path) -> ReadoutModel:
    with open(path) as fh:
        return ReadoutModel.from_dict(yaml.safe_load(fh))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature records with a train/test partition.

    task is "classify" (labels are class names, targets None) or
    "predict_squeezing" (every label is squeezed_vacuum, targets are the
    complex zeta values).
    """

    task: str
    records: tuple[FeatureRecord, ...]
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.task not in ("classify", "predict_squeezing"):
            raise ConfigError(f"unknown task {self.task!r}")
        total = len(self.records)
        seen = set(self.train_indices) | set(self.test_indices)
        if len(self.train_indices) + len(self.test_indices) != len(seen):
            raise ConfigError("train and test splits overlap")
        if any(i < 0 or i >= total for i in seen):
            raise ConfigError("split index out of range")
        if self.task == "classify":
            if not self.classes:
                raise ConfigError("classification dataset needs class names")
            unknown = {r.label for r in self.records} - set(self.classes)
            if unknown:
                raise ConfigError(f"records carry labels outside the class list: {unknown}")

    @property
    def n_features(self) -> int:
        return self.records[0].features.shape[0] if self.records else 0

    def indices(self, split: str) -> tuple[int, ...]:
        if split == "train":
            return self.train_indices
        if split == "test":
            return self.test_indices
        raise ConfigError(f"split must be 'train' or 'test', got {split!r}")

    def features(self, split: str) -> np.ndarray:
        idx = self.indices(split)
        if not idx:
            return np.zeros((0, self.n_features))
        return np.array([self.records[i].features for i in idx], dtype=float)

    def one_hot(self, split: str) -> np.ndarray:
        if self.task != "classify":
            raise ConfigError("one-hot labels only exist for the classification task")
        idx = self.indices(split)
        out = np.zeros((len(idx), len(self.classes)))
        lookup = {name: j for j, name in enumerate(self.classes)}
        for row, i in enumerate(idx):
            out[row, lookup[self.records[i].label]] = 1.0
        return out

    def class_indices(self, split: str) -> np.ndarray:
        return np.argmax(self.one_hot(split), axis=1)

    def targets(self, split: str) -> np.ndarray:
        if self.task != "predict_squeezing":
            raise ConfigError("complex targets only exist for the regression task")
        idx = self.indices(split)
        values = []
        for i in idx:
            t = self.records[i].target
            if t is None:
                raise ConfigError(f"record {i} has no regression target")
            values.append(t)
        return np.asarray(values, dtype=complex)

    def to_csv(self) -> str:
        n_feat = self.n_features
        cols = ["split", "label", "target_re", "target_im", "divergence_fraction",
                "flagged", "kind", "beta_re", "beta_im", "nbar", "r", "theta",
                "cat_phase"] + [f"f{j}" for j in range(n_feat)]
        split_of = {}
        for i in self.train_indices:
            split_of[i] = "train"
        for i in self.test_indices:
            split_of[i] = "test"
        lines = ["#task," + self.task + "," + ",".join(self.classes)]
        lines.append(",".join(cols))
        for i, rec in enumerate(self.records):
            s = rec.state
            t = rec.target if rec.target is not None else complex("nan")
            row = [split_of.get(i, "unused"), rec.label, repr(t.real), repr(t.imag),
                   repr(rec.divergence_fraction), str(int(rec.flagged)), s.kind,
                   repr(s.beta.real), repr(s.beta.imag), repr(s.nbar), repr(s.r),
                   repr(s.theta), repr(s.cat_phase)]
            row += [repr(float(v)) for v in rec.features]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()


def dataset_from_csv(text: str) -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("#task,"):
        raise ConfigError("dataset CSV must start with a '#task' line")
    head = lines[0].split(",")
    task = head[1]
    classes = tuple(c for c in head[2:] if c)
    cols = lines[1].split(",")
    n_feat = sum(1 for c in cols if c.startswith("f") and c[1:].isdigit())
    records = []
    train_idx, test_idx = [], []
    for ln in lines[2:]:
        cells = ln.split(",")
        if len(cells) != len(cols):
            raise ConfigError(f"dataset row has {len(cells)} cells, expected {len(cols)}")
        split, label = cells[0], cells[1]
        target = complex(float(cells[2]), float(cells[3]))
        state = StateSpec(kind=cells[6], beta=complex(float(cells[7]), float(cells[8])),
                          nbar=float(cells[9]), r=float(cells[10]),
                          theta=float(cells[11]), cat_phase=float(cells[12]))
        features = np.array([float(v) for v in cells[13:13 + n_feat]])
        rec = FeatureRecord(features=features, label=label, state=state,
                            target=None if np.isnan(target.real) else target,
                            divergence_fraction=float(cells[4]),
                            flagged=bool(int(cells[5])))
        if split == "train":
            train_idx.append(len(records))
        elif split == "test":
            test_idx.append(len(records))
        records.append(rec)
    return Dataset(task=task, records=tuple(records), train_indices=tuple(train_idx),
                   test_indices=tuple(test_idx), classes=classes)


def load_dataset(path) -> Dataset:
    with open(path) as fh:
        return dataset_from_csv(fh.read())


@dataclass(frozen=True, eq=False)
class TrainingCurves:
    """Per-epoch loss and score; score is accuracy or MSE depending on kind."""

    kind: str
    epoch: np.ndarray
    train_loss: np.ndarray
    test_loss: np.ndarray
    train_score: np.ndarray
    test_score: np.ndarray

    def to_csv(self) -> str:
        name = "acc" if self.kind == "classify" else "mse"
        lines = [f"epoch,train_loss,test_loss,train_{name},test_{name}"]
        for k in range(self.epoch.shape[0]):
            lines.append(f"{int(self.epoch[k])},{float(self.train_loss[k])!r},"
                         f"{float(self.test_loss[k])!r},{float(self.train_score[k])!r},"
                         f"{float(self.test_score[k])!r}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())


class _Adam:
    """Plain Adam on a list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], hyper: Hyperparams):
        self.params = params
        self.hyper = hyper
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]):
        h = self.hyper
        self.t += 1
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= h.beta1
            m += (1.0 - h.beta1) * g
            v *= h.beta2
            v += (1.0 - h.beta2) * g * g
            m_hat = m / (1.0 - h.beta1 ** self.t)
            v_hat = v / (1.0 - h.beta2 ** self.t)
            p -= h.learning_rate * m_hat / (np.sqrt(v_hat) + h.eps)


def _standardize_stats(train_features: np.ndarray):
    mean = train_features.mean(axis=0)
    std = train_features.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    return mean, std


def _check_finite_loss(loss: float, epoch: int):
    if not math.isfinite(loss):
        raise DivergenceError(f"training loss became non-finite at epoch {epoch}")


def train_classifier(dataset: Dataset, hyper: Hyperparams = CLASSIFY_HYPERPARAMS):
    """Softmax readout trained with Adam; returns (model, curves)."""
    if dataset.task != "classify":
        raise ConfigError("train_classifier needs a classification dataset")
    if len(dataset.classes) < 2:
        raise ConfigError("classification needs at least two classes")
    x_train = dataset.features("train")
    y_train = dataset.one_hot("train")
    x_test = dataset.features("test")
    y_test = dataset.one_hot("test")
    mean, std = _standardize_stats(x_train)
    xs_train = (x_train - mean) / std
    xs_test = (x_test - mean) / std
    k, n_feat = len(dataset.classes), x_train.shape[1]

    rng = np.random.default_rng(hyper.seed)
    weights = 0.01 * rng.standard_normal((k, n_feat))
    bias = np.zeros(k)
    opt = _Adam([weights, bias], hyper)
    curves = {key: np.zeros(hyper.epochs) for key in
              ("train_loss", "test_loss", "train_score", "test_score")}
    true_train = np.argmax(y_train, axis=1)
    true_test = np.argmax(y_test, axis=1) if y_test.size else np.zeros(0, int)

    for epoch in range(hyper.epochs):
        if hyper.batch_size is None or hyper.batch_size >= xs_train.shape[0]:
            xb, yb = xs_train, y_train
        else:
            pick = rng.permutation(xs_train.shape[0])[:hyper.batch_size]
            xb, yb = xs_train[pick], y_train[pick]
        loss, gw, gb = classifier_loss_and_grad(weights, bias, xb, yb)
        _check_finite_loss(loss, epoch)
        opt.step([gw, gb])

        curves["train_loss"][epoch] = loss
        pred_train = np.argmax(xs_train @ weights.T + bias, axis=1)
        curves["train_score"][epoch] = float(np.mean(pred_train == true_train))
        if xs_test.shape[0]:
            probs = softmax(xs_test @ weights.T + bias)
            curves["test_loss"][epoch] = cross_entropy(probs, y_test)
            curves["test_score"][epoch] = float(np.mean(np.argmax(probs, axis=1) == true_test))

    model = ReadoutModel(kind="classify", weights=weights, bias=bias,
                         feature_mean=mean, feature_std=std, classes=dataset.classes)
    return model, TrainingCurves(kind="classify", epoch=np.arange(hyper.epochs),
                                 train_loss=curves["train_loss"],
                                 test_loss=curves["test_loss"],
                                 train_score=curves["train_score"],
                                 test_score=curves["test_score"])


def train_regressor(dataset: Dataset, hyper: Hyperparams = REGRESS_HYPERPARAMS):
    """Two-output linear readout for zeta; returns (model, curves)."""
    if dataset.task != "predict_squeezing":
        raise ConfigError("train_regressor needs a regression dataset")
    x_train = dataset.features("train")
    x_test = dataset.features("test")
    z_train = dataset.targets("train")
    z_test = dataset.targets("test")
    y_train = np.column_stack([z_train.real, z_train.imag])
    y_test = np.column_stack([z_test.real, z_test.imag]) if z_test.size else np.zeros((0, 2))
    mean, std = _standardize_stats(x_train)
    xs_train = (x_train - mean) / std
    xs_test = (x_test - mean) / std

    rng = np.random.default_rng(hyper.seed)
    weights = 0.01 * rng.standard_normal((2, x_train.shape[1]))
    bias = np.zeros(2)
    opt = _Adam([weights, bias], hyper)
    curves = {key: np.zeros(hyper.epochs) for key in
              ("train_loss", "test_loss", "train_score", "test_score")}

    for epoch in range(hyper.epochs):
        if hyper.batch_size is None or hyper.batch_size >= xs_train.shape[0]:
            xb, yb = xs_train, y_train
        else:
            pick = rng.permutation(xs_train.shape[0])[:hyper.batch_size]
            xb, yb = xs_train[pick], y_train[pick]
        loss, gw, gb = regressor_loss_and_grad(weights, bias, xb, yb)
        _check_finite_loss(loss, epoch)
        opt.step([gw, gb])

        curves["train_loss"][epoch] = loss
        full_train, _, _ = regressor_loss_and_grad(weights, bias, xs_train, y_train)
        curves["train_score"][epoch] = full_train
        if xs_test.shape[0]:
            test_mse, _, _ = regressor_loss_and_grad(weights, bias, xs_test, y_test)
            curves["test_loss"][epoch] = test_mse
            curves["test_score"][epoch] = test_mse

    model = ReadoutModel(kind="regress", weights=weights, bias=bias,
                         feature_mean=mean, feature_std=std)
    return model, TrainingCurves(kind="regress", epoch=np.arange(hyper.epochs),
                                 train_loss=curves["train_loss"],
                                 test_loss=curves["test_loss"],
                                 train_score=curves["train_score"],
                                 test_score=curves["test_score"])


@dataclass(frozen=True, eq=False)
class Metrics:
    """Evaluation results; confusion rows follow the dataset class order."""

    kind: str
    accuracy: float | None = None
    confusion_counts: np.ndarray | None = None     # (k, k) ints, rows = true
    confusion: np.ndarray | None = None            # row-normalized
    mse: float | None = None
    squared_errors: np.ndarray | None = None       # per-record |zeta - pred|^2

    def confusion_csv(self, classes: tuple[str, ...]) -> str:
        lines = ["true\\predicted," + ",".join(classes)]
        for j, name in enumerate(classes):
            row = ",".join(repr(float(v)) for v in self.confusion[j])
            lines.append(f"{name},{row}")
        return "\n".join(lines) + "\n"


def evaluate(model: ReadoutModel, dataset: Dataset, split: str = "test") -> Metrics:
    """Accuracy plus row-normalized confusion matrix, or MSE for regression."""
    if model.kind == "classify":
        x = dataset.features(split)
        true = dataset.class_indices(split)
        pred = model.predict_class(x)
        k = len(dataset.classes)
        counts = np.zeros((k, k), dtype=int)
        for t, p in zip(true, pred):
            counts[t, p] += 1
        row_total = counts.sum(axis=1)
        norm = np.zeros((k, k))
        for j in range(k):
            if row_total[j]:
                norm[j] = counts[j] / row_total[j]
        return Metrics(kind="classify", accuracy=float(np.mean(pred == true)),
                       confusion_counts=counts, confusion=norm)
    x = dataset.features(split)
    zeta = dataset.targets(split)
    pred = model.predict_complex(x)
    sq = np.abs(zeta - pred) ** 2
    return Metrics(kind="regress", mse=float(sq.mean()), squared_errors=sq)


# ---------------------------------------------------------------------------
# Dataset generation


def _draw_state(task: str, label: str, rng: np.random.Generator) -> tuple[StateSpec, complex | None]:
    if task == "predict_squeezing" or label == "squeezed_vacuum":
        r = rng.uniform(*SQUEEZED_R_RANGE)
        theta = rng.uniform(*PHASE_RANGE)
        state = StateSpec(kind="squeezed_vacuum", r=r, theta=theta)
        target = complex(r * np.exp(2j * theta)) if task == "predict_squeezing" else None
        return state, target
    if label == "cat":
        mag = rng.uniform(*CAT_BETA_RANGE)
        phi = rng.uniform(*PHASE_RANGE)
        return StateSpec(kind="cat", beta=mag * np.exp(1j * phi)), None
    if label == "coherent":
        mag = rng.uniform(*COHERENT_BETA_RANGE)
        phi = rng.uniform(*PHASE_RANGE)
        return StateSpec(kind="coherent", beta=mag * np.exp(1j * phi)), None
    raise ConfigError(f"no parameter range for label {label!r}")


def _one_record(spec: ReservoirSpec, schedule: Schedule, state: StateSpec,
                label: str, target, trajectories: int, sample_seed, run_seed,
                threshold: float) -> FeatureRecord:
    samples = sample_state(state, trajectories, seed=sample_seed)
    try:
        series = run_ensemble(spec, samples, schedule, seed=run_seed,
                              threshold=threshold)
    except DivergenceError:
        return FeatureRecord(features=np.zeros(spec.n_modes), label=label,
                             state=state, target=target,
                             divergence_fraction=1.0, flagged=True)
    steady = steady_occupations(series)
    features = feature_vector(series, steady)
    frac = float(series.divergence_fraction)
    return FeatureRecord(features=features, label=label, state=state,
                         target=target, divergence_fraction=frac,
                         flagged=frac > FLAG_DIVERGENCE_FRACTION)


def generate_dataset(task: str, spec: ReservoirSpec, schedule: Schedule, *,
                     train_count: int, test_count: int, trajectories: int,
                     seed=None, threshold: float = 1e10, workers: int = 1) -> Dataset:
    """Sample input states, run the reservoir, and assemble feature records.

    For classification train_count/test_count are per class.  Record seeds
    are derived from the record's position, so the dataset is reproducible
    and independent of generation order and worker count.
    """
    if task not in ("classify", "predict_squeezing"):
        raise ConfigError(f"unknown task {task!r}")
    if train_count < 1 or test_count < 0:
        raise ConfigError("need at least one training record and test_count >= 0")
    base = _seed_base(seed)
    labels = CLASS_NAMES if task == "classify" else ("squeezed_vacuum",)
    per_label = train_count + test_count
    plans = []
    train_idx, test_idx = [], []
    for c, label in enumerate(labels):
        for i in range(per_label):
            param_rng = np.random.default_rng(
                np.random.SeedSequence(base + (0, c, i)))
            state, target = _draw_state(task, label, param_rng)
            (train_idx if i < train_count else test_idx).append(len(plans))
            plans.append((spec, schedule, state, label, target, trajectories,
                          base + (1, c, i), base + (2, c, i), threshold))
    if workers > 1:
        import multiprocessing
        with multiprocessing.Pool(workers) as pool:
            records = pool.starmap(_one_record, plans)
    else:
        records = [_one_record(*plan) for plan in plans]
    return Dataset(task=task, records=tuple(records),
                   train_indices=tuple(train_idx), test_indices=tuple(test_idx),
                   classes=CLASS_NAMES if task == "classify" else ())
