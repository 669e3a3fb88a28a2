"""L2-regularized binary logistic regression fitted by full-batch gradient descent."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import DataError

DEFAULT_LAMBDA = 1.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000

_ARMIJO = 1e-4
_MAX_BACKTRACK = 60


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float
    lam: float = DEFAULT_LAMBDA
    converged: bool = False
    iterations_used: int = 0

    @property
    def dim(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias, "lambda": self.lam,
                "converged": self.converged, "iterations_used": self.iterations_used}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["weights"], dtype=float), float(d["bias"]), float(d["lambda"]),
                   bool(d["converged"]), int(d["iterations_used"]))


def sigmoid(z):
    """Overflow-free logistic function; works on scalars and arrays."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def _check_xy(X, y) -> Tuple[object, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} labels")
    data = X.data if sp.issparse(X) else np.asarray(X)
    if not np.all(np.isfinite(data)):
        raise DataError("X contains NaN or infinite values")
    return X, y


def _objective(w, b, X, y, lam):
    n = y.shape[0]
    z = X @ w + b
    # log(1 + e^z) - y z, averaged
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + lam / (2.0 * n) * float(w @ w)
    return loss, z


def _gradient(w, z, X, y, lam):
    n = y.shape[0]
    r = sigmoid(z) - y
    gw = X.T @ r / n + lam * w / n
    return np.asarray(gw).ravel(), float(np.mean(r))


def loss_and_gradient(model: LogisticModel, X, y, lam: Optional[float] = None) -> Tuple[float, np.ndarray]:
    """Objective and gradient at ``model``; the gradient's last entry is the bias component."""
    lam = model.lam if lam is None else lam
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0] or X.shape[1] != model.dim:
        raise DataError(f"shape mismatch: X {X.shape}, y {y.shape}, weights {model.weights.shape}")
    loss, z = _objective(model.weights, model.bias, X, y, lam)
    gw, gb = _gradient(model.weights, z, X, y, lam)
    return float(loss), np.append(gw, gb)


def fit_logreg(X, y, lam: float = DEFAULT_LAMBDA, max_iter: int = DEFAULT_MAX_ITER,
               tol: float = DEFAULT_TOL, seed: int = 0, trace: Optional[list] = None) -> LogisticModel:
    """Minimize mean log-loss + lam/(2n) ||w||^2 from w = 0, b = 0.

    Each step moves along the negative gradient; the trial step length is the
    Barzilai-Borwein estimate, shrunk by backtracking until the Armijo
    condition holds, so every accepted step decreases the objective. Stops
    when the gradient's max-norm drops below ``tol``. ``seed`` is accepted for
    interface symmetry; the solver draws no random numbers.
    """
    X, y = _check_xy(X, y)
    if X.shape[0] < 2:
        raise DataError("need at least 2 samples")
    if X.shape[1] < 1:
        raise DataError("need at least 1 feature")
    if not np.all((y == 0) | (y == 1)):
        raise DataError("labels must be 0/1")
    if y.min() == y.max():
        raise DataError("labels contain a single class")
    if lam < 0:
        raise DataError("lambda must be >= 0")

    w = np.zeros(X.shape[1])
    b = 0.0
    loss, z = _objective(w, b, X, y, lam)
    gw, gb = _gradient(w, z, X, y, lam)
    step = 1.0
    prev = None
    converged = False
    it = 0
    if trace is not None:
        trace.append(loss)
    for it in range(1, max_iter + 1):
        gnorm_inf = max(float(np.max(np.abs(gw))) if gw.size else 0.0, abs(gb))
        if gnorm_inf < tol:
            converged = True
            it -= 1
            break
        gsq = float(gw @ gw) + gb * gb
        if prev is not None:
            dw, db, dgw, dgb = prev
            sy = float(dw @ dgw) + db * dgb
            yy = float(dgw @ dgw) + dgb * dgb
            if sy > 0 and yy > 0:
                step = sy / yy
        t = step
        for _ in range(_MAX_BACKTRACK):
            w_new = w - t * gw
            b_new = b - t * gb
            loss_new, z_new = _objective(w_new, b_new, X, y, lam)
            if loss_new <= loss - _ARMIJO * t * gsq:
                break
            t *= 0.5
        else:
            break  # no decrease possible at float precision
        gw_new, gb_new = _gradient(w_new, z_new, X, y, lam)
        prev = (w_new - w, b_new - b, gw_new - gw, gb_new - gb)
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        if trace is not None:
            trace.append(loss)
    else:
        gnorm_inf = max(float(np.max(np.abs(gw))) if gw.size else 0.0, abs(gb))
        converged = gnorm_inf < tol
    return LogisticModel(w, float(b), float(lam), converged, it)


def decision_function(model: LogisticModel, X) -> np.ndarray:
    if X.shape[1] != model.dim:
        raise DataError(f"expected {model.dim} features, got {X.shape[1]}")
    return np.asarray(X @ model.weights).ravel() + model.bias


def predict_proba(model: LogisticModel, x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != model.dim:
        raise DataError(f"expected {model.dim} features, got {x.shape[0]}")
    return float(sigmoid(float(x @ model.weights) + model.bias))


def predict_proba_matrix(model: LogisticModel, X) -> np.ndarray:
    return sigmoid(decision_function(model, X))
