"""scikit-learn style wrappers around the kernel solvers and the SGD trainer."""
import numpy as np
from scipy import optimize, special
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .activations import parse_activation
from .diagnostics import cluster_auc, similarity, step_distance
from .kernel import build_features, solve_min_norm, solve_mse_ball, train_kernel_gd
from .network import (
    Dataset,
    SplineParams,
    WeightParams,
    forward,
    forward_weights,
    grad,
    init_spline,
    loss_value,
    sgd_step,
    to_spline,
)

_SOLVERS = ("equality", "mse-ball", "gd", "sgd", "adam")


class KernelRegimeRegressor(RegressorMixin, BaseEstimator):
    """Frozen random breakplanes with output weights fit by a kernel-regime solver.

    ``solver`` is ``equality`` (min-norm interpolation), ``mse-ball``
    (min-norm within mse ``eps``) or a gradient trainer (``gd``/``sgd``,
    ``adam``) that stops at mse ``eps``.
    """

    def __init__(self, activation="relu", n_hidden=4000, solver="equality", eps=1e-6,
                 lr=None, max_iters=200_000, bias_scale=1.1, random_state=0):
        self.activation = activation
        self.n_hidden = n_hidden
        self.solver = solver
        self.eps = eps
        self.lr = lr
        self.max_iters = max_iters
        self.bias_scale = bias_scale
        self.random_state = random_state

    def fit(self, X, y):
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        act = parse_activation(self.activation) if isinstance(self.activation, str) else self.activation
        rng = np.random.default_rng(self.random_state)
        s0 = init_spline(X, self.n_hidden, rng, bias_scale=self.bias_scale)
        phi = build_features(s0, act, X)
        if self.solver == "equality":
            sol = solve_min_norm(phi, y)
        elif self.solver == "mse-ball":
            sol = solve_mse_ball(phi, y, eps=self.eps)
        else:
            sol = train_kernel_gd(phi, y, optimizer=self.solver, lr=self.lr,
                                  mse_threshold=self.eps, max_iters=self.max_iters)
        self.activation_ = act
        self.features_ = phi
        self.solution_ = sol
        self.spline_ = SplineParams(s0.xi, s0.gamma, sol.mu_hat, s0.omega)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "spline_")
        return forward(self.spline_, self.activation_, np.atleast_2d(np.asarray(X, dtype=float)))


def torch_like_init(D, H, C, rng):
    """Uniform fan-in initialization: ``w, b ~ U(+-1/sqrt(D))``, ``v ~ U(+-1/sqrt(H))``."""
    k = 1.0 / np.sqrt(D)
    return WeightParams(
        rng.uniform(-k, k, (H, D)),
        rng.uniform(-k, k, H),
        rng.uniform(-1.0, 1.0, (H, C)) / np.sqrt(H),
    )


def _one_hot(labels, classes):
    return (np.asarray(labels)[:, None] == classes[None, :]).astype(float)


def _kernel_objective(Phi, Y, loss, shape):
    N = Phi.shape[0]

    def fg(vflat):
        v = vflat.reshape(shape)
        out = Phi @ v
        if loss == "mse":
            r = out - Y
            return 0.5 * float((r**2).sum()) / N, (Phi.T @ (r / N)).ravel()
        lse = special.logsumexp(out, axis=1, keepdims=True)
        logp = out - lse
        return -float((Y * logp).sum()) / N, (Phi.T @ ((np.exp(logp) - Y) / N)).ravel()

    return fg


class ShallowNetworkClassifier(ClassifierMixin, BaseEstimator):
    """One-hidden-layer classifier trained by minibatch SGD in weight coordinates.

    Training records, per epoch, the training loss, the cluster AUC of the
    breakplane similarity matrix and the mean matched-pair step distance.
    With ``kernel_after=k`` the hidden layer is frozen after ``k`` epochs
    and the output weights are refit on the whole training set (L-BFGS for
    either loss, or plain GD with step ``1/L`` for ``mse``); the loss of
    every kernel iterate is logged.
    """

    def __init__(self, activation="relu", n_hidden=200, epochs=10, batch_size=256, lr=0.5,
                 loss="softmax-ce", kernel_after=None, kernel_solver="lbfgs", kernel_iters=200,
                 track=True, random_state=0):
        self.activation = activation
        self.n_hidden = n_hidden
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.loss = loss
        self.kernel_after = kernel_after
        self.kernel_solver = kernel_solver
        self.kernel_iters = kernel_iters
        self.track = track
        self.random_state = random_state

    def _record(self, epoch, phase, p, data, steps, eval_set):
        row = {"epoch": epoch, "phase": phase, "train_loss": loss_value(p, self.activation_, data, self.loss)}
        if self.track:
            row["auc"] = cluster_auc(similarity(to_spline(p)))
            row["step_distance"] = float(np.mean(steps)) if steps else float("nan")
        if eval_set is not None:
            row["test_accuracy"] = self._accuracy(p, *eval_set)
        self.history_.append(row)

    def _accuracy(self, p, X, labels):
        pred = self.classes_[forward_weights(p, self.activation_, X).argmax(axis=1)]
        return float(np.mean(pred == np.asarray(labels)))

    def fit(self, X, y, eval_set=None):
        X = np.asarray(X, dtype=float)
        self.classes_ = np.unique(y)
        Y = _one_hot(y, self.classes_)
        act = parse_activation(self.activation) if isinstance(self.activation, str) else self.activation
        self.activation_ = act
        rng = np.random.default_rng(self.random_state)
        N, D = X.shape
        p = torch_like_init(D, self.n_hidden, len(self.classes_), rng)
        data = Dataset(X, Y)
        self.history_ = []
        self.step_distances_ = []
        self.kernel_losses_ = []
        self.switch_step_ = None
        self._record(0, "adaptive", p, data, [], eval_set)
        prev = to_spline(p) if self.track else None
        n_batches = max(N // self.batch_size, 1)
        adaptive_epochs = self.epochs if self.kernel_after is None else min(self.kernel_after, self.epochs)
        step = 0
        for epoch in range(1, adaptive_epochs + 1):
            order = rng.permutation(N)
            steps = []
            for b in range(n_batches):
                idx = order[b * self.batch_size:(b + 1) * self.batch_size]
                _, g = grad(p, act, Dataset(X[idx], Y[idx]), loss=self.loss)
                p = sgd_step(p, g, self.lr)
                step += 1
                if self.track:
                    s = to_spline(p)
                    steps.append(step_distance(prev, s))
                    prev = s
            self.step_distances_.extend(steps)
            self._record(epoch, "adaptive", p, data, steps, eval_set)
        if self.kernel_after is not None:
            self.switch_step_ = step
            p = self._kernel_phase(p, data)
            self._record(self.epochs, "kernel", p, data, [], eval_set)
        self.params_ = p
        self.n_features_in_ = D
        return self

    def _kernel_phase(self, p, data):
        Phi = self.activation_.eval(data.X @ p.w.T + p.b)
        fg = _kernel_objective(Phi, data.y, self.loss, p.v.shape)
        v = p.v.ravel().copy()
        self.kernel_losses_ = [fg(v)[0]]
        if self.kernel_solver == "lbfgs":
            def log(xk):
                self.kernel_losses_.append(fg(xk)[0])

            res = optimize.minimize(fg, v, jac=True, method="L-BFGS-B", callback=log,
                                    options={"maxiter": self.kernel_iters})
            v = res.x
        elif self.kernel_solver == "gd":
            if self.loss != "mse":
                raise ValueError("kernel_solver 'gd' needs loss 'mse'")
            # gradient of sum r^2 / 2N is Lipschitz with constant lambda_max(Phi^T Phi / N)
            L = np.linalg.eigvalsh(Phi.T @ Phi / Phi.shape[0])[-1]
            for _ in range(self.kernel_iters):
                v -= fg(v)[1] / L
                self.kernel_losses_.append(fg(v)[0])
        else:
            raise ValueError("kernel_solver must be 'lbfgs' or 'gd'")
        return WeightParams(p.w, p.b, v.reshape(p.v.shape))

    def decision_function(self, X):
        check_is_fitted(self, "params_")
        return forward_weights(self.params_, self.activation_, np.asarray(X, dtype=float))

    def predict_proba(self, X):
        out = self.decision_function(X)
        out = out - out.max(axis=1, keepdims=True)
        e = np.exp(out)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[self.decision_function(X).argmax(axis=1)]
