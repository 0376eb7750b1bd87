"""Shallow networks in raw-weight and Radon-spline coordinates.

Raw weights ``(w_i, b_i, v_i)`` give ``f(x) = sum_i v_i phi(<w_i, x> + b_i)``.
Spline coordinates ``(xi_i, gamma_i, mu_i, omega_i)`` give the same function
as ``sum_i mu_i phi(omega_i (<xi_i, x> - gamma_i)) / omega_i``.
"""
import json
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .activations import ActivationError, ActivationSpec

_UNIT_TOL = 1e-12


def _as_outputs(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


@dataclass
class WeightParams:
    w: np.ndarray
    b: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.w = np.atleast_2d(np.asarray(self.w, dtype=float))
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        self.v = np.asarray(self.v, dtype=float)
        if self.v.ndim == 0:
            self.v = self.v.reshape(1)
        H = self.w.shape[0]
        if H < 1 or self.b.shape != (H,) or self.v.shape[0] != H:
            raise ValueError("inconsistent neuron counts in WeightParams")
        if not (np.all(np.isfinite(self.w)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.v))):
            raise ValueError("WeightParams must be finite")

    @property
    def n_neurons(self):
        return self.w.shape[0]

    def copy(self):
        return WeightParams(self.w.copy(), self.b.copy(), self.v.copy())


@dataclass
class SplineParams:
    xi: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    omega: np.ndarray = None

    def __post_init__(self):
        self.xi = np.atleast_2d(np.asarray(self.xi, dtype=float))
        H = self.xi.shape[0]
        self.gamma = np.asarray(self.gamma, dtype=float).reshape(-1)
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu.ndim == 0:
            self.mu = self.mu.reshape(1)
        if self.omega is None:
            self.omega = np.ones(H)
        self.omega = np.asarray(self.omega, dtype=float).reshape(-1)
        if self.gamma.shape != (H,) or self.mu.shape[0] != H or self.omega.shape != (H,):
            raise ValueError("inconsistent neuron counts in SplineParams")
        norms = np.linalg.norm(self.xi, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            raise ValueError("xi rows must be unit vectors")
        if np.any(self.omega <= 0):
            raise ValueError("omega must be positive")

    @property
    def n_neurons(self):
        return self.xi.shape[0]

    @property
    def dim(self):
        return self.xi.shape[1]

    @property
    def augmented(self):
        """Cylinder coordinates ``(xi, -gamma)`` as an ``H x (D+1)`` array."""
        return np.column_stack([self.xi, -self.gamma])

    def copy(self):
        return SplineParams(self.xi.copy(), self.gamma.copy(), self.mu.copy(), self.omega.copy())


@dataclass
class SplineGradient:
    """Loss gradient in spline coordinates (``xi`` part is tangent to the sphere)."""

    xi: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    omega: np.ndarray


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float)
        if self.X.shape[0] < 1 or self.y.shape[0] != self.X.shape[0]:
            raise ValueError("Dataset needs N >= 1 rows with matching targets")
        if np.isnan(self.X).any() or np.isnan(self.y).any():
            raise ValueError("Dataset contains NaN")

    @property
    def augmented(self):
        """Rows ``(x_n, 1)``."""
        return np.column_stack([self.X, np.ones(len(self.X))])

    @property
    def diameter(self):
        X = self.X
        if len(X) < 2:
            return 1.0
        d = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        return float(d.max())


def to_spline(p: WeightParams) -> SplineParams:
    norms = np.linalg.norm(p.w, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero input-weight vector has no orientation")
    scale = norms if p.v.ndim == 1 else norms[:, None]
    return SplineParams(p.w / norms[:, None], -p.b / norms, p.v * scale, norms)


def to_weights(s: SplineParams) -> WeightParams:
    scale = s.omega if s.mu.ndim == 1 else s.omega[:, None]
    return WeightParams(s.omega[:, None] * s.xi, -s.omega * s.gamma, s.mu / scale)


def _check_pointwise(act: ActivationSpec):
    if not act.pointwise:
        raise ActivationError(f"{act.name} cannot be used in a forward pass")


def preactivations(s: SplineParams, X):
    """Signed offsets ``<xi_i, x_n> - gamma_i`` as an ``N x H`` array."""
    return np.asarray(X, dtype=float) @ s.xi.T - s.gamma


def features(s: SplineParams, act: ActivationSpec, X):
    _check_pointwise(act)
    u = preactivations(s, X)
    if act.homogeneous:
        return act.eval(u)
    return act.eval(s.omega * u) / s.omega


def forward(s: SplineParams, act: ActivationSpec, X):
    """Network output; shape ``(N,)`` for scalar mu, ``(N, C)`` otherwise."""
    return features(s, act, X) @ s.mu


def forward_weights(p: WeightParams, act: ActivationSpec, X):
    _check_pointwise(act)
    z = np.asarray(X, dtype=float) @ p.w.T + p.b
    return act.eval(z) @ p.v


def alpha_map(p: WeightParams, alphas) -> WeightParams:
    alphas = np.broadcast_to(np.asarray(alphas, dtype=float), (p.n_neurons,))
    if np.any(alphas <= 0):
        raise ValueError("alpha must be positive")
    v_scale = alphas if p.v.ndim == 1 else alphas[:, None]
    return WeightParams(alphas[:, None] * p.w, alphas * p.b, p.v / v_scale)


def delta_stat(p: WeightParams):
    v2 = p.v**2 if p.v.ndim == 1 else (p.v**2).sum(axis=1)
    return v2 - (p.w**2).sum(axis=1) - p.b**2


def delta_stat_spline(s: SplineParams):
    mu2 = s.mu**2 if s.mu.ndim == 1 else (s.mu**2).sum(axis=1)
    return mu2 / s.omega**2 - (s.gamma**2 + 1.0) * s.omega**2


# ---- losses and gradients --------------------------------------------------


def _loss_and_residual(out, y, loss):
    """Loss value and dL/d(out), both for outputs shaped ``(N, C)``."""
    n = out.shape[0]
    if loss == "mse":
        r = out - y
        return 0.5 * float((r**2).sum()) / n, r / n
    if loss == "softmax-ce":
        logp = out - special.logsumexp(out, axis=1, keepdims=True)
        value = -float((y * logp).sum()) / n
        return value, (np.exp(logp) - y) / n
    raise ValueError("loss must be 'mse' or 'softmax-ce'")


def loss_value(params, act, data: Dataset, loss="mse"):
    """``mse`` is ``sum ||f - y||^2 / (2N)``; ``softmax-ce`` is mean cross-entropy."""
    if isinstance(params, SplineParams):
        out = forward(params, act, data.X)
    else:
        out = forward_weights(params, act, data.X)
    return _loss_and_residual(_as_outputs(out), _as_outputs(data.y), loss)[0]


def grad(params, act: ActivationSpec, data: Dataset, loss="mse"):
    """Exact gradient in the coordinates of ``params``.

    Returns ``(loss_value, gradient)`` where the gradient has the same
    container type. For spline coordinates the ``xi`` gradient is projected
    onto the tangent space of the sphere; its ``omega`` entry is the plain
    partial derivative.
    """
    _check_pointwise(act)
    X = data.X
    y = _as_outputs(data.y)
    if isinstance(params, SplineParams):
        s = params
        mu = _as_outputs(s.mu)
        u = preactivations(s, X)
        z = s.omega * u
        phi = act.eval(z)
        dphi = act.deriv(z)
        A = phi / s.omega
        value, R = _loss_and_residual(A @ mu, y, loss)
        G = R @ mu.T
        E = G * dphi
        g_mu = A.T @ R
        g_xi = E.T @ X
        g_xi -= (g_xi * s.xi).sum(axis=1, keepdims=True) * s.xi
        g_gamma = -E.sum(axis=0)
        g_omega = (G * (-phi / s.omega**2 + dphi * u / s.omega)).sum(axis=0)
        g_mu = g_mu[:, 0] if s.mu.ndim == 1 else g_mu
        return value, SplineGradient(g_xi, g_gamma, g_mu, g_omega)
    p = params
    v = _as_outputs(p.v)
    z = X @ p.w.T + p.b
    phi = act.eval(z)
    dphi = act.deriv(z)
    value, R = _loss_and_residual(phi @ v, y, loss)
    E = (R @ v.T) * dphi
    g_v = phi.T @ R
    g_v = g_v[:, 0] if p.v.ndim == 1 else g_v
    return value, WeightParams(E.T @ X, E.sum(axis=0), g_v)


def sgd_step(p: WeightParams, g: WeightParams, lr) -> WeightParams:
    return WeightParams(p.w - lr * g.w, p.b - lr * g.b, p.v - lr * g.v)


def retract(xi):
    """Map rows back onto the unit sphere after an ambient step."""
    return xi / np.linalg.norm(xi, axis=1, keepdims=True)


# ---- initialization --------------------------------------------------------


def uniform_directions(n, dim, rng):
    g = rng.standard_normal((n, dim))
    return retract(g)


def init_spline(X, n_neurons, rng, n_outputs=None, bias_scale=1.1, omega=1.0):
    """Kernel-regime initialization: xi uniform on the sphere, omega fixed,
    gamma uniform on ``[-a, a]`` with ``a = bias_scale * max ||x_n||`` and mu = 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a = bias_scale * float(np.linalg.norm(X, axis=1).max())
    xi = uniform_directions(n_neurons, X.shape[1], rng)
    gamma = rng.uniform(-a, a, size=n_neurons)
    mu = np.zeros(n_neurons) if n_outputs is None else np.zeros((n_neurons, n_outputs))
    return SplineParams(xi, gamma, mu, np.full(n_neurons, float(omega)))


# ---- checkpoints -----------------------------------------------------------

_MAGIC = b"RSPL"
_VERSION = 1


def save_checkpoint(path, s: SplineParams, metadata=None):
    """Write the binary record and a ``.json`` sidecar next to it."""
    mu = _as_outputs(s.mu)
    H, D = s.xi.shape
    C = mu.shape[1]
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4I", _VERSION, H, D, C))
        for arr in (s.xi, s.gamma, mu, s.omega):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    meta = dict(metadata or {})
    meta.update(format="RSPL", version=_VERSION, H=H, D=D, C=C, scalar_output=s.mu.ndim == 1)
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)


def load_checkpoint(path):
    """Return ``(SplineParams, metadata)``; metadata is empty without a sidecar."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise ValueError("not an RSPL checkpoint")
    if len(raw) < 20:
        raise ValueError("truncated RSPL header")
    version, H, D, C = struct.unpack("<4I", raw[4:20])
    if version != _VERSION:
        raise ValueError(f"unsupported RSPL version {version}")
    count = H * D + H + H * C + H
    if len(raw) != 20 + 8 * count:
        raise ValueError("RSPL payload size does not match header")
    data = np.frombuffer(raw, dtype="<f8", offset=20).astype(float)
    xi = data[: H * D].reshape(H, D)
    gamma = data[H * D : H * D + H]
    mu = data[H * D + H : H * D + H + H * C].reshape(H, C)
    omega = data[H * D + H + H * C :]
    meta = {}
    try:
        with open(str(path) + ".json") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    if meta.get("scalar_output", C == 1):
        mu = mu[:, 0]
    return SplineParams(xi, gamma, mu, omega), meta
