"""Small probing classifiers trained from scratch.

Logistic regression and a one-hidden-layer MLP with a softmax output, trained on
cross-entropy by mini-batch Adam. `train_probe` grid-searches learning rate and
batch size, stops each run once the validation loss has not improved for
`patience` epochs, and keeps the weights from the epoch with the best
validation accuracy.
"""
import logging
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy.special import expit, log_softmax, softmax
from probesizer.config import BATCH_SIZES, LEARNING_RATES, MAX_EPOCHS, PATIENCE
from probesizer.core import ClassifierKind
from probesizer.exceptions import DomainError
from probesizer.utils import derive_rng, parallel_map

logger = logging.getLogger(__name__)


def _activate(name, z):
    if name == "sigmoid":
        return expit(z)
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activation_slope(name, z, h):
    # h is the activation output for z
    if name == "sigmoid":
        return h * (1.0 - h)
    if name == "tanh":
        return 1.0 - h ** 2
    return (z > 0).astype(z.dtype)


class ProbeModel:
    """Forward pass, loss and gradients for one ClassifierSpec; parameters live outside"""

    def __init__(self, spec):
        self.spec = spec

    def init_params(self, rng):
        d, k = self.spec.input_dim, self.spec.num_classes
        if self.spec.kind is ClassifierKind.LOGREG:
            return {"W": self._uniform(rng, d, (d, k)), "b": np.zeros(k)}
        h = self.spec.hidden_units
        return {
            "W1": self._uniform(rng, d, (d, h)),
            "b1": np.zeros(h),
            "W2": self._uniform(rng, h, (h, k)),
            "b2": np.zeros(k),
        }

    @staticmethod
    def _uniform(rng, fan_in, shape):
        limit = 1.0 / np.sqrt(max(fan_in, 1))
        return rng.uniform(-limit, limit, size=shape)

    def _forward(self, params, X):
        if self.spec.kind is ClassifierKind.LOGREG:
            return X @ params["W"] + params["b"], None
        z = X @ params["W1"] + params["b1"]
        hidden = _activate(self.spec.activation, z)
        return hidden @ params["W2"] + params["b2"], (z, hidden)

    def logits(self, params, X):
        return self._forward(params, X)[0]

    def log_proba(self, params, X):
        return log_softmax(self.logits(params, X), axis=1)

    def predict_proba(self, params, X):
        return softmax(self.logits(params, X), axis=1)

    def loss(self, params, X, y):
        """Mean cross-entropy in nats"""
        log_p = self.log_proba(params, X)
        return float(-log_p[np.arange(len(y)), y].mean())

    def loss_and_grad(self, params, X, y):
        logits, cache = self._forward(params, X)
        log_p = log_softmax(logits, axis=1)
        m = len(y)
        loss = float(-log_p[np.arange(m), y].mean())

        delta = np.exp(log_p)
        delta[np.arange(m), y] -= 1.0
        delta /= m

        if self.spec.kind is ClassifierKind.LOGREG:
            return loss, {"W": X.T @ delta, "b": delta.sum(axis=0)}
        z, hidden = cache
        grads = {"W2": hidden.T @ delta, "b2": delta.sum(axis=0)}
        upstream = (delta @ params["W2"].T) * _activation_slope(self.spec.activation, z, hidden)
        grads["W1"] = X.T @ upstream
        grads["b1"] = upstream.sum(axis=0)
        return loss, grads


class Adam:
    def __init__(self, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.steps = 0
        self.first = {}
        self.second = {}

    def step(self, params, grads):
        """Updates `params` in place"""
        self.steps += 1
        correction1 = 1 - self.beta1 ** self.steps
        correction2 = 1 - self.beta2 ** self.steps
        for name, grad in grads.items():
            m = self.first.get(name, 0.0) * self.beta1 + (1 - self.beta1) * grad
            v = self.second.get(name, 0.0) * self.beta2 + (1 - self.beta2) * grad ** 2
            self.first[name] = m
            self.second[name] = v
            params[name] -= (
                self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            )


@dataclass(frozen=True)
class TrainerConfig:
    model: object
    learning_rates: tuple = LEARNING_RATES
    batch_sizes: tuple = BATCH_SIZES
    max_epochs: int = MAX_EPOCHS
    patience: int = PATIENCE

    def __post_init__(self):
        object.__setattr__(self, "learning_rates", tuple(self.learning_rates))
        object.__setattr__(self, "batch_sizes", tuple(self.batch_sizes))
        if not self.learning_rates or not self.batch_sizes:
            raise DomainError("learning rate and batch size grids should be non-empty")
        if any(not rate > 0 for rate in self.learning_rates):
            raise DomainError("learning rates should be positive")
        if any(size < 1 for size in self.batch_sizes):
            raise DomainError("batch sizes should be at least 1")
        if self.max_epochs < 1:
            raise DomainError("max_epochs should be at least 1")
        if not 1 <= self.patience < self.max_epochs:
            raise DomainError(
                f"patience should lie in [1, max_epochs), got {self.patience} with max_epochs {self.max_epochs}"
            )

    @classmethod
    def reduced(cls, model, learning_rates=(1e-2,), batch_sizes=(64,), max_epochs=MAX_EPOCHS):
        """Single-candidate grid for the simulated case studies"""
        return cls(model, learning_rates, batch_sizes, max_epochs, min(PATIENCE, max_epochs - 1))

    def with_model(self, model):
        return replace(self, model=model)

    def candidates(self):
        return list(product(self.learning_rates, self.batch_sizes))


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float

    def to_dict(self):
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_accuracy": self.val_accuracy,
        }


@dataclass(frozen=True)
class _CandidateRun:
    learning_rate: float
    batch_size: int
    params: dict
    history: tuple
    selected_epoch: int
    val_accuracy: float


@dataclass(frozen=True, eq=False)
class TrainedProbe:
    spec: object
    params: dict = field(repr=False)
    history: tuple = field(repr=False)
    selected_epoch: int
    learning_rate: float
    batch_size: int
    val_accuracy: float
    test_accuracy: float
    test_predictions: np.ndarray = field(repr=False)
    test_labels: np.ndarray = field(repr=False)
    degenerate: bool = False

    @property
    def test_correct(self):
        return self.test_predictions == self.test_labels

    def predict_proba(self, X):
        return ProbeModel(self.spec).predict_proba(self.params, X)

    def log_proba(self, X):
        return ProbeModel(self.spec).log_proba(self.params, X)

    def predict(self, X):
        return np.argmax(ProbeModel(self.spec).logits(self.params, X), axis=1)

    def summary(self):
        return {
            "classifier": self.spec.describe(),
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "selected_epoch": self.selected_epoch,
            "epochs_run": len(self.history),
            "val_accuracy": self.val_accuracy,
            "test_accuracy": self.test_accuracy,
            "degenerate": self.degenerate,
        }


def accuracy(model, params, X, y):
    if len(y) == 0:
        return 0.0
    return float(np.mean(np.argmax(model.logits(params, X), axis=1) == y))


def _fit_candidate(model, train, val, learning_rate, batch_size, cfg, rng):
    X, y = train
    X_val, y_val = val
    params = model.init_params(rng)
    optimizer = Adam(learning_rate)

    history = []
    best_accuracy, best_params, best_epoch = -1.0, None, 0
    best_loss, stale = np.inf, 0
    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), batch_size):
            batch = order[start : start + batch_size]
            loss, grads = model.loss_and_grad(params, X[batch], y[batch])
            optimizer.step(params, grads)
            total += loss * len(batch)
        val_loss = model.loss(params, X_val, y_val)
        val_accuracy = accuracy(model, params, X_val, y_val)
        history.append(EpochRecord(epoch, total / len(y), val_loss, val_accuracy))

        if val_accuracy > best_accuracy:
            best_accuracy = val_accuracy
            best_params = {name: value.copy() for name, value in params.items()}
            best_epoch = epoch
        if val_loss < best_loss:
            best_loss, stale = val_loss, 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    logger.debug(
        "lr %g batch %d: %d epochs, best val acc %.4f at epoch %d",
        learning_rate,
        batch_size,
        len(history),
        best_accuracy,
        best_epoch,
    )
    return _CandidateRun(
        learning_rate, batch_size, best_params, tuple(history), best_epoch, best_accuracy
    )


def train_probe(ds, cfg, rng_seed=0, stream=()):
    """Grid search by validation accuracy; the grid order breaks ties.

    Candidate i draws its initialisation and shuffling from the stream
    (rng_seed, *stream, i).
    """
    if not ds.has_splits():
        raise DomainError("training a probe needs train, val and test rows")
    spec = cfg.model
    if spec.input_dim != ds.dim:
        raise DomainError(f"probe expects D={spec.input_dim} but the dataset has D={ds.dim}")
    if spec.num_classes != ds.num_classes:
        raise DomainError(
            f"probe expects K={spec.num_classes} but the dataset has K={ds.num_classes}"
        )

    model = ProbeModel(spec)
    train, val, test = ds.split("train"), ds.split("val"), ds.split("test")
    candidates = cfg.candidates()

    def fit(index):
        learning_rate, batch_size = candidates[index]
        rng = derive_rng(rng_seed, *stream, index)
        return _fit_candidate(model, train, val, learning_rate, batch_size, cfg, rng)

    runs = parallel_map(fit, range(len(candidates)))
    best = max(range(len(runs)), key=lambda index: (runs[index].val_accuracy, -index))
    run = runs[best]

    X_test, y_test = test
    test_predictions = np.argmax(model.logits(run.params, X_test), axis=1)
    val_predictions = np.argmax(model.logits(run.params, val[0]), axis=1)
    degenerate = len(np.unique(val_predictions)) == 1
    if degenerate:
        logger.warning(
            "%s predicts class %d for every validation item",
            spec.describe(),
            int(val_predictions[0]),
        )

    probe = TrainedProbe(
        spec=spec,
        params=run.params,
        history=run.history,
        selected_epoch=run.selected_epoch,
        learning_rate=run.learning_rate,
        batch_size=run.batch_size,
        val_accuracy=run.val_accuracy,
        test_accuracy=float(np.mean(test_predictions == y_test)) if len(y_test) else 0.0,
        test_predictions=test_predictions,
        test_labels=y_test,
        degenerate=degenerate,
    )
    logger.info(
        "%s: lr %g, batch %d, epoch %d, val %.4f, test %.4f",
        spec.describe(),
        probe.learning_rate,
        probe.batch_size,
        probe.selected_epoch,
        probe.val_accuracy,
        probe.test_accuracy,
    )
    return probe
