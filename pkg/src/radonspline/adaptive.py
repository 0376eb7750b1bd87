"""Adaptive-regime breakplane dynamics for scalar-output shallow networks.

Residuals are ``eps = f(X) - y`` and the loss is ``0.5 * sum(eps**2)``, so the
right-hand sides below are exact gradient flows without a ``1/N`` factor.
A breakplane is a point on the cylinder ``S^{D-1} x R`` written as
``(xi, gamma)`` or in augmented form ``(xi, -gamma)``.
"""
import warnings
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationSpec, catalog_lookup
from .network import Dataset, SplineParams, WeightParams, to_spline, to_weights


@lru_cache(maxsize=1)
def _relu():
    return catalog_lookup("ReLU")


def _is_relu(act):
    return act is None or act.name == "ReLU"


@dataclass
class CylinderPoint:
    xi: np.ndarray
    gamma: float

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float).reshape(-1)
        self.gamma = float(self.gamma)
        if abs(np.linalg.norm(self.xi) - 1.0) > 1e-10:
            raise ValueError("xi must be a unit vector")

    @property
    def augmented(self):
        return np.append(self.xi, -self.gamma)

    def antipode(self):
        return CylinderPoint(-self.xi, -self.gamma)

    @classmethod
    def from_angle(cls, theta, gamma):
        return cls(np.array([np.cos(theta), np.sin(theta)]), gamma)


@dataclass
class ActivationRegion:
    """Activation pattern ``sigma`` of one breakplane over the data (zero counts as active)."""

    mask: np.ndarray
    X: np.ndarray = field(repr=False)

    @classmethod
    def at(cls, point: CylinderPoint, X):
        X = np.asarray(X, dtype=float)
        return cls(X @ point.xi - point.gamma >= 0.0, X)

    @property
    def X_sigma(self):
        return self.X * self.mask[:, None]

    @property
    def X_aug_sigma(self):
        return np.hstack([self.X, np.ones((len(self.X), 1))]) * self.mask[:, None]

    @property
    def active(self):
        return np.flatnonzero(self.mask)


@dataclass
class FieldSample:
    point: CylinderPoint
    v: np.ndarray
    residuals: np.ndarray
    d_sigma: np.ndarray
    region: ActivationRegion


def residuals(s: SplineParams, act: ActivationSpec, data: Dataset):
    from .network import forward

    out = forward(s, act, data.X)
    return out.reshape(-1) - np.asarray(data.y, dtype=float).reshape(-1)


def half_sse(s: SplineParams, act: ActivationSpec, data: Dataset):
    r = residuals(s, act, data)
    return 0.5 * float(r @ r)


def _slopes(s: SplineParams, act, X):
    """``phi'(omega u)`` per (sample, neuron); the 0/1 mask for ReLU."""
    U = X @ s.xi.T - s.gamma[None, :]
    if _is_relu(act):
        return (U >= 0.0).astype(float), U
    return act.deriv(s.omega[None, :] * U), U


def _scalar_mu(s: SplineParams):
    if s.mu.ndim != 1:
        raise ValueError("adaptive dynamics are defined for scalar outputs")
    return s.mu


def rhs_spline(s: SplineParams, act, data: Dataset, eps):
    """Gradient flow of ``(xi_i, gamma_i)`` in spline coordinates.

    ``dxi_i/dt = -mu_i <eps, X_i - <X_i, xi_i> xi_i>`` and
    ``dgamma_i/dt = mu_i <eps, 1_i>``, where the subscript ``i`` masks the
    rows by ``phi'``.
    """
    mu = _scalar_mu(s)
    X = np.asarray(data.X, dtype=float)
    eps = np.asarray(eps, dtype=float).reshape(-1)
    A, _ = _slopes(s, act, X)
    d = (A * eps[:, None]).T @ X
    e1 = A.T @ eps
    tang = d - np.sum(d * s.xi, axis=1, keepdims=True) * s.xi
    return -mu[:, None] * tang, mu * e1


def rhs_weights(s: SplineParams, act, data: Dataset, eps):
    """``(xi_i, gamma_i)`` velocities induced by plain gradient flow on ``(w, b, v)``.

    Same directions as :func:`rhs_spline` scaled by ``1 / omega_i**2``, plus
    the coupling ``gamma_i <eps, X_i xi_i>`` in the offset equation.
    """
    mu = _scalar_mu(s)
    if np.any(s.omega == 0):
        raise ValueError("omega must be nonzero")
    X = np.asarray(data.X, dtype=float)
    eps = np.asarray(eps, dtype=float).reshape(-1)
    A, _ = _slopes(s, act, X)
    d = (A * eps[:, None]).T @ X
    e1 = A.T @ eps
    dxi = np.sum(d * s.xi, axis=1)
    tang = d - dxi[:, None] * s.xi
    rate = mu / s.omega**2
    return -rate[:, None] * tang, rate * (e1 + s.gamma * dxi)


def _field(point: CylinderPoint, X, eps, weights, mask, parameterization):
    d = weights @ X
    e1 = weights.sum()
    d_aug = np.append(d, e1)
    along = d @ point.xi
    if parameterization == "weights":
        v = d_aug - along * point.augmented
    elif parameterization == "spline":
        v = d_aug - along * np.append(point.xi, 0.0)
    else:
        raise ValueError(f"unknown parameterization {parameterization!r}")
    region = ActivationRegion(mask, X)
    return FieldSample(point, v, eps, d, region)


def shared_field(point: CylinderPoint, data: Dataset, eps, parameterization="weights"):
    """ReLU field ``v_t`` with ``dxi~_i/dt = -(mu_i / omega_i**2) v_t(xi~_i)``.

    For ``parameterization="spline"`` the rate is ``-mu_i`` and the offset
    row loses its ``gamma`` coupling.
    """
    X = np.asarray(data.X, dtype=float)
    eps = np.asarray(eps, dtype=float).reshape(-1)
    mask = X @ point.xi - point.gamma >= 0.0
    return _field(point, X, eps, eps * mask, mask, parameterization)


def smooth_boundary_field(point: CylinderPoint, act: ActivationSpec, data: Dataset, eps, omega=1.0, parameterization="weights"):
    """:func:`shared_field` with the 0/1 mask replaced by ``phi'(omega u)``."""
    X = np.asarray(data.X, dtype=float)
    eps = np.asarray(eps, dtype=float).reshape(-1)
    u = X @ point.xi - point.gamma
    w = act.deriv(omega * u)
    return _field(point, X, eps, eps * w, u >= 0.0, parameterization)


def attractor(region: ActivationRegion, eps):
    """Sink and source of the region's field as ``(sink, source)``, or ``None``.

    The sink has ``xi = d / |d|`` and ``gamma = -<eps, 1_sigma> / |d|`` with
    ``d = <eps, X_sigma>``; the source is its antipode.
    """
    eps = np.asarray(eps, dtype=float).reshape(-1)
    d = (eps * region.mask) @ region.X
    nd = np.linalg.norm(d)
    if nd == 0.0:
        return None
    e1 = float(eps @ region.mask)
    sink = CylinderPoint(d / nd, -e1 / nd)
    return sink, sink.antipode()


def region_field(region: ActivationRegion, point: CylinderPoint, eps):
    """``v_t(sigma, .)`` with the pattern held fixed at ``region``."""
    eps = np.asarray(eps, dtype=float).reshape(-1)
    return _field(point, region.X, eps, eps * region.mask, region.mask, "weights").v


# ---- landscape classification ---------------------------------------------


def conditional_loss(s: SplineParams, i, act, data: Dataset, theta, gamma):
    """Loss with every parameter except breakplane ``i`` fixed (D = 2)."""
    theta = np.asarray(theta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    X = np.asarray(data.X, dtype=float)
    y = np.asarray(data.y, dtype=float).reshape(-1)
    act = act or _relu()
    mu = _scalar_mu(s)
    others = np.ones(len(mu), dtype=bool)
    others[i] = False
    U = X @ s.xi[others].T - s.gamma[others]
    w = s.omega[others]
    base = (act.eval(w * U) / w) @ mu[others] - y
    th, ga = np.broadcast_arrays(theta, gamma)
    u = (np.cos(th)[..., None] * X[:, 0] + np.sin(th)[..., None] * X[:, 1]) - ga[..., None]
    out = base + mu[i] * act.eval(s.omega[i] * u) / s.omega[i]
    return 0.5 * np.sum(out**2, axis=-1)


def boundary_normal(theta, x):
    """Unit normal of ``E_n`` in ``(theta, gamma)`` coordinates, pointing to the active side."""
    xi_perp = np.array([-np.sin(theta), np.cos(theta)])
    g = np.array([xi_perp @ x, -1.0])
    return g / np.linalg.norm(g)


def classify_boundary(s: SplineParams, i, n, data: Dataset, h=None, act=None, dwell=5, tol=1e-9):
    """Shape of the conditional loss across ``E_n`` at breakplane ``i``.

    One-sided slopes are least-squares fits over ``dwell`` probes spaced by
    ``h`` on each side along the cylinder normal. Returns ``"valley"``,
    ``"ridge"``, ``"pass_through"``, ``"plateau"``, ``"basin"`` or
    ``"ambiguous"`` when a probe crosses another datapoint's boundary.
    """
    X = np.asarray(data.X, dtype=float)
    if X.shape[1] != 2:
        raise ValueError("boundary classification is implemented for D = 2")
    h = h if h is not None else 1e-3 * data.diameter
    xi = s.xi[i]
    theta = float(np.arctan2(xi[1], xi[0]))
    gamma = float(s.gamma[i])
    u_n = X[n] @ xi - gamma
    if abs(u_n) > 10 * h:
        raise ValueError("breakplane is not on the datapoint's ellipse")
    nu = boundary_normal(theta, X[n])
    t = h * np.arange(1, dwell + 1)
    pts = {}
    for side in (1.0, -1.0):
        th = theta + side * t * nu[0]
        ga = gamma + side * t * nu[1]
        U = np.cos(th)[:, None] * X[:, 0] + np.sin(th)[:, None] * X[:, 1] - ga[:, None]
        pattern = U >= 0.0
        others = np.delete(pattern, n, axis=1)
        if np.any(others != others[0]):
            return "ambiguous"
        if np.any(pattern[:, n] != (side > 0)):
            return "ambiguous"
        pts[side] = (th, ga, pattern[0])
    l0 = float(conditional_loss(s, i, act, data, theta, gamma))
    scale = max(abs(l0), 1.0)
    slopes = {}
    for side, (th, ga, _) in pts.items():
        vals = conditional_loss(s, i, act, data, th, ga) - l0
        # slope along +nu: right side ascends with t, left side with -t
        A = np.stack([side * t, t**2], axis=1)
        coef = np.linalg.lstsq(A, vals, rcond=None)[0]
        slopes[side] = coef[0]
    left, right = slopes[-1.0], slopes[1.0]
    flat = tol * scale / h
    no_data_left = not pts[-1.0][2].any()
    if no_data_left and abs(left) <= flat:
        # right > 0 means loss rises into the data side
        return "basin" if right > flat else "plateau"
    if left < -flat and right > flat:
        return "valley"
    if left > flat and right < -flat:
        return "ridge"
    return "pass_through"


# ---- simulation -------------------------------------------------------------


@dataclass
class Trajectory:
    steps: list
    snapshots: list
    losses: list
    events: list
    warnings: int = 0

    def final(self):
        return self.snapshots[-1]


class _PinTracker:
    def __init__(self, H, N, tol, dwell):
        self.tol = tol
        self.dwell = dwell
        self.count = np.zeros((H, N), dtype=int)
        self.pinned = np.zeros((H, N), dtype=bool)
        self.paired = np.zeros(H, dtype=bool)

    def update(self, step, dist, events):
        close = dist < self.tol
        self.count = np.where(close, self.count + 1, 0)
        onset = (self.count >= self.dwell) & ~self.pinned
        lost = self.pinned & ~close
        for i, n in zip(*np.nonzero(onset)):
            events.append({"step": step, "neuron": int(i), "event": "pin", "datapoints": [int(n)]})
        for i, n in zip(*np.nonzero(lost)):
            events.append({"step": step, "neuron": int(i), "event": "unpin", "datapoints": [int(n)]})
        self.pinned = (self.pinned | onset) & close
        multi = self.pinned.sum(axis=1) >= 2
        for i in np.flatnonzero(multi & ~self.paired):
            ids = [int(n) for n in np.flatnonzero(self.pinned[i])]
            events.append({"step": step, "neuron": int(i), "event": "pin_pair", "datapoints": ids})
        self.paired = multi


def _spline_velocity(s: SplineParams, act, data, freeze_mu, frozen):
    eps = residuals(s, act, data)
    dxi, dgamma = rhs_spline(s, act, data, eps)
    if freeze_mu:
        dmu = np.zeros_like(s.mu)
    else:
        U = data.X @ s.xi.T - s.gamma
        dmu = -(act.eval(s.omega * U) / s.omega).T @ eps
    dxi[frozen] = 0.0
    dgamma[frozen] = 0.0
    dmu[frozen] = 0.0
    return dxi, dgamma, dmu


def _weight_velocity(p: WeightParams, act, data, freeze_mu, frozen):
    X = np.asarray(data.X, dtype=float)
    Z = X @ p.w.T + p.b
    eps = act.eval(Z) @ p.v - np.asarray(data.y, dtype=float).reshape(-1)
    G = act.deriv(Z) * eps[:, None]
    dw = -p.v[:, None] * (G.T @ X)
    db = -p.v * G.sum(axis=0)
    dv = np.zeros_like(p.v) if freeze_mu else -(act.eval(Z).T @ eps)
    dw[frozen] = 0.0
    db[frozen] = 0.0
    dv[frozen] = 0.0
    return dw, db, dv


def _advance_spline(s, act, data, dt, method, freeze_mu, frozen):
    def add(base, k, c):
        xi = base.xi + c * k[0]
        xi /= np.linalg.norm(xi, axis=1, keepdims=True)
        return SplineParams(xi, base.gamma + c * k[1], base.mu + c * k[2], base.omega)

    k1 = _spline_velocity(s, act, data, freeze_mu, frozen)
    if method == "euler":
        return add(s, k1, dt)
    k2 = _spline_velocity(add(s, k1, dt / 2), act, data, freeze_mu, frozen)
    k3 = _spline_velocity(add(s, k2, dt / 2), act, data, freeze_mu, frozen)
    k4 = _spline_velocity(add(s, k3, dt), act, data, freeze_mu, frozen)
    k = tuple((a + 2 * b + 2 * c + d) / 6 for a, b, c, d in zip(k1, k2, k3, k4))
    return add(s, k, dt)


def _advance_weights(p, act, data, dt, method, freeze_mu, frozen):
    def add(base, k, c):
        return WeightParams(base.w + c * k[0], base.b + c * k[1], base.v + c * k[2])

    k1 = _weight_velocity(p, act, data, freeze_mu, frozen)
    if method == "euler":
        return add(p, k1, dt)
    k2 = _weight_velocity(add(p, k1, dt / 2), act, data, freeze_mu, frozen)
    k3 = _weight_velocity(add(p, k2, dt / 2), act, data, freeze_mu, frozen)
    k4 = _weight_velocity(add(p, k3, dt), act, data, freeze_mu, frozen)
    k = tuple((a + 2 * b + 2 * c + d) / 6 for a, b, c, d in zip(k1, k2, k3, k4))
    return add(p, k, dt)


def simulate(
    s0: SplineParams,
    act,
    data: Dataset,
    parameterization="spline",
    steps=1000,
    step_size=1e-3,
    method="euler",
    freeze_mu=False,
    frozen=None,
    record_every=1,
    pin_tol=None,
    pin_dwell=50,
):
    """Integrate breakplane dynamics and log boundary and pinning events.

    ``parameterization="spline"`` integrates ``(xi, gamma, mu)`` with
    :func:`rhs_spline`; ``"weights"`` runs plain gradient flow on
    ``(w, b, v)``. ``freeze_mu`` holds the output coefficients (``mu`` or
    ``v``) fixed and ``frozen`` is a boolean mask of neurons held entirely
    fixed. Pinning means breakplane-to-datapoint distance below ``pin_tol``
    (default ``1e-2`` times the data diameter) for ``pin_dwell`` steps.
    """
    act = act or _relu()
    if method not in ("euler", "rk4"):
        raise ValueError(f"unknown method {method!r}")
    if parameterization not in ("spline", "weights"):
        raise ValueError(f"unknown parameterization {parameterization!r}")
    X = np.asarray(data.X, dtype=float)
    H, N = s0.n_neurons, len(X)
    frozen = np.zeros(H, dtype=bool) if frozen is None else np.asarray(frozen, dtype=bool)
    pin_tol = pin_tol if pin_tol is not None else 1e-2 * data.diameter
    tracker = _PinTracker(H, N, pin_tol, pin_dwell)
    events = []
    n_warn = 0
    s = s0.copy()
    p = to_weights(s) if parameterization == "weights" else None
    pattern = X @ s.xi.T - s.gamma >= 0.0
    traj = Trajectory([0], [s.copy()], [half_sse(s, act, data)], events)
    for step in range(1, steps + 1):
        if p is None:
            s = _advance_spline(s, act, data, step_size, method, freeze_mu, frozen)
        else:
            p = _advance_weights(p, act, data, step_size, method, freeze_mu, frozen)
            s = to_spline(p)
        U = X @ s.xi.T - s.gamma
        new = U >= 0.0
        dist = np.abs(U).T
        flips = new != pattern
        for i in np.flatnonzero(flips.any(axis=0)):
            ids = [int(n) for n in np.flatnonzero(flips[:, i])]
            events.append({"step": step, "neuron": int(i), "event": "cross", "datapoints": ids})
            # flips of points sitting on the breakplane are chatter, not a skipped region
            if len(ids) > 1 and np.any(dist[i, ids] >= pin_tol):
                n_warn += 1
                warnings.warn(f"step {step}: neuron {i} crossed {len(ids)} boundaries at once; reduce step_size")
        pattern = new
        tracker.update(step, dist, events)
        if step % record_every == 0 or step == steps:
            traj.steps.append(step)
            traj.snapshots.append(s.copy())
            traj.losses.append(half_sse(s, act, data))
    traj.warnings = n_warn
    return traj


def attractor_speed_ratio(prev_eps, next_eps, region: ActivationRegion, s: SplineParams, i, dt):
    """Sink displacement per unit time over breakplane ``i`` speed.

    Logged rather than thresholded: no quantitative cluster criterion is
    attached to it.
    """
    a = attractor(region, prev_eps)
    b = attractor(region, next_eps)
    if a is None or b is None:
        return np.nan
    sink_speed = np.linalg.norm(b[0].augmented - a[0].augmented) / dt
    point = CylinderPoint(s.xi[i], s.gamma[i])
    v = region_field(region, point, next_eps)
    plane_speed = abs(s.mu[i] / s.omega[i] ** 2) * np.linalg.norm(v)
    return np.inf if plane_speed == 0 else sink_speed / plane_speed
