"""Kernel regime: frozen features, minimum-norm and relaxed solves, and GD."""
import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .activations import ActivationSpec
from .fourier import direct_transform_2d
from .network import Dataset, SplineParams, features

RANK_RTOL = 1e-10
KAPPA_2 = 1.0 / (4.0 * np.pi)


class InconsistentSystemError(ValueError):
    def __init__(self, residual):
        super().__init__(f"system is inconsistent; least-squares residual norm {residual:.3e}")
        self.residual = residual


class InfeasibleError(ValueError):
    def __init__(self, floor):
        super().__init__(f"eps is below the best achievable mse {floor:.3e}")
        self.floor = floor


def snapshot_hash(s: SplineParams, act: ActivationSpec) -> str:
    h = hashlib.sha256(act.label.encode())
    for arr in (s.xi, s.gamma, s.omega):
        h.update(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class FeatureMatrix:
    phi: np.ndarray = field(repr=False)
    activation: ActivationSpec
    snapshot: SplineParams = field(repr=False)
    provenance: str

    def rebuild(self, X):
        return build_features(self.snapshot, self.activation, X)


def build_features(s: SplineParams, act: ActivationSpec, X) -> FeatureMatrix:
    frozen = SplineParams(s.xi.copy(), s.gamma.copy(), np.zeros(s.n_neurons), s.omega.copy())
    return FeatureMatrix(features(frozen, act, X), act, frozen, snapshot_hash(frozen, act))


@dataclass
class KernelSolution:
    mu_hat: np.ndarray
    residual_mse: float
    norm_sq: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "method": self.method,
            "residual_mse": self.residual_mse,
            "norm_sq": self.norm_sq,
            "n_neurons": int(self.mu_hat.shape[0]),
            "diagnostics": self.diagnostics,
        }


def _matrix(phi):
    return phi.phi if isinstance(phi, FeatureMatrix) else np.asarray(phi, dtype=float)


def _mse(Phi, mu, y):
    r = y - Phi @ mu
    return float((r**2).sum()) / Phi.shape[0]


def _solution(Phi, y, mu0, mu, method, diag):
    d = mu - mu0
    return KernelSolution(mu, _mse(Phi, mu, y), float((d**2).sum()), method, diag)


def solve_min_norm(phi, y, mu0=None, allow_lsq=False, rtol=RANK_RTOL, consistency_tol=1e-8):
    """Minimum-norm correction ``mu0 + pinv(Phi) (y - Phi mu0)``.

    The pseudoinverse is applied through a complete orthogonal
    decomposition: column-pivoted QR reveals the rank, and a second QR of
    the retained rows compresses them to a triangular factor.
    """
    Phi = _matrix(phi)
    y = np.asarray(y, dtype=float)
    N, H = Phi.shape
    mu0 = np.zeros((H,) + y.shape[1:]) if mu0 is None else np.asarray(mu0, dtype=float)
    r0 = y - Phi @ mu0
    Q, R, perm = linalg.qr(Phi, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    top = diag[0] if diag.size else 0.0
    rank = int(np.count_nonzero(diag > rtol * top)) if top > 0 else 0
    info = {"rank": rank, "pivot_ratio_min": float(diag[rank - 1] / top) if rank else 0.0}
    # pivots within three decades of the cutoff make the rank decision fragile
    info["rank_crossover"] = bool(np.any((diag > rtol * top) & (diag < 1e3 * rtol * top)))
    if rank == 0:
        correction = np.zeros_like(mu0)
    else:
        Z, T = np.linalg.qr(R[:rank].T)
        c = Q[:, :rank].T @ r0
        s = linalg.solve_triangular(T, c, trans="T", lower=False)
        correction = np.empty_like(mu0)
        correction[perm] = Z @ s
    mu = mu0 + correction
    resid = float(np.linalg.norm(y - Phi @ mu))
    info["lsq_residual_norm"] = resid
    if resid > consistency_tol * max(float(np.linalg.norm(y)), 1.0) and not allow_lsq:
        raise InconsistentSystemError(resid)
    return _solution(Phi, y, mu0, mu, "equality", info)


class _RidgePath:
    """Ridge solutions ``mu(tau)`` and their mse through one thin SVD."""

    def __init__(self, Phi, r0, rtol):
        U, s, Vt = np.linalg.svd(Phi, full_matrices=False)
        keep = s > rtol * s[0] if s.size and s[0] > 0 else np.zeros(s.shape, bool)
        self.U, self.s, self.Vt = U[:, keep], s[keep], Vt[keep]
        self.c = self.U.T @ r0
        perp = r0 - self.U @ self.c
        self.floor_sq = float((perp**2).sum())
        self.N = Phi.shape[0]
        self.scale = float(self.s[0] ** 2) if self.s.size else 1.0

    def mse(self, tau):
        f = (tau / (self.s**2 + tau)).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return (float(((f * self.c) ** 2).sum()) + self.floor_sq) / self.N

    def correction(self, tau):
        f = (self.s / (self.s**2 + tau)).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return self.Vt.T @ (f * self.c)


def solve_mse_ball(phi, y, mu0=None, eps=1e-6, rtol=RANK_RTOL, max_iter=200, tau_bounds=(1e-12, 1e12)):
    """Smallest ``||mu - mu0||`` with ``mean (y - Phi mu)**2 <= eps``.

    Solved through the Lagrangian dual: the optimum is a ridge solution with
    parameter ``tau`` (``tau = N / lambda``), found by bisection on
    ``log tau`` since the residual grows monotonically with ``tau``. The
    bracket is expressed relative to the largest squared singular value.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    Phi = _matrix(phi)
    y = np.asarray(y, dtype=float)
    N, H = Phi.shape
    mu0 = np.zeros((H,) + y.shape[1:]) if mu0 is None else np.asarray(mu0, dtype=float)
    r0 = y - Phi @ mu0
    start = float((r0**2).sum()) / N
    if eps >= start:
        return _solution(Phi, y, mu0, mu0.copy(), "mse_ball", {"active": False, "tau": np.inf, "dual": 0.0, "iterations": 0})
    path = _RidgePath(Phi, r0, rtol)
    floor = path.floor_sq / N
    if eps < floor:
        raise InfeasibleError(floor)
    lo = np.log(tau_bounds[0] * path.scale)
    hi = np.log(tau_bounds[1] * path.scale)
    if path.mse(np.exp(lo)) > eps:
        # target sits between the bracket floor and the exact interpolant
        while path.mse(np.exp(lo)) > eps and lo > -700:
            lo -= 10.0
    its = 0
    for its in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if path.mse(np.exp(mid)) > eps:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-15:
            break
    tau = float(np.exp(lo))
    mu = mu0 + path.correction(tau)
    info = {"active": True, "tau": tau, "dual": N / tau, "iterations": its, "rank": int(path.s.size)}
    return _solution(Phi, y, mu0, mu, "mse_ball", info)


def train_kernel_gd(
    phi,
    y,
    mu0=None,
    optimizer="adam",
    lr=None,
    mse_threshold=1e-6,
    max_iters=200_000,
    betas=(0.9, 0.999),
    adam_eps=1e-8,
    record_every=0,
):
    """Train only the output weights on ``mean (Phi mu - y)**2``.

    Plain ``gd`` defaults to step ``1/L`` with ``L`` the gradient's
    Lipschitz constant; ``adam`` defaults to step ``1e-3``. Stops at the
    mse threshold or after ``max_iters`` and flags non-convergence.
    """
    Phi = _matrix(phi)
    y = np.asarray(y, dtype=float)
    N, H = Phi.shape
    mu0 = np.zeros((H,) + y.shape[1:]) if mu0 is None else np.asarray(mu0, dtype=float)
    mu = mu0.copy()
    if optimizer == "sgd":
        # full batch, so sgd is plain gd
        optimizer = "gd"
    if optimizer == "gd":
        smax = np.linalg.norm(Phi, 2)
        step = lr if lr is not None else N / (2.0 * smax**2)
    elif optimizer == "adam":
        step = 1e-3 if lr is None else lr
        m = np.zeros_like(mu)
        v = np.zeros_like(mu)
        b1, b2 = betas
    else:
        raise ValueError("optimizer must be 'gd', 'sgd' or 'adam'")
    history = []
    PhiT = np.ascontiguousarray(Phi.T)
    r = Phi @ mu - y
    mse = float((r**2).sum()) / N
    it = 0
    while mse > mse_threshold and it < max_iters:
        it += 1
        g = PhiT @ r
        g *= 2.0 / N
        if optimizer == "gd":
            mu -= step * g
        else:
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            denom = np.sqrt(v / (1 - b2**it))
            denom += adam_eps
            mu -= (step / (1 - b1**it)) * m / denom
        r = Phi @ mu - y
        mse = float((r**2).sum()) / N
        if record_every and it % record_every == 0:
            history.append((it, mse))
    info = {"iterations": it, "converged": mse <= mse_threshold, "optimizer": optimizer, "step": step}
    if record_every:
        info["history"] = history
    return _solution(Phi, y, mu0, mu, "gd", info)


# ---- Radon seminorm ---------------------------------------------------------


def slice_profiles(grid, act: ActivationSpec, n_angles=180, n_freq=None, k_max=None):
    """Per-direction profiles of the seminorm integrand.

    For each angle ``theta`` in ``[0, 2 pi)`` the central slice of the 2-D
    transform of ``grid`` is multiplied by ``KAPPA_2 |k| filter(k)`` and
    inverse-transformed along the slice. Returns ``(angles, offsets, c)``
    with ``c[j, m]`` the real profile at angle ``j`` and offset ``m``.
    """
    x_axis, y_axis = grid.axes
    h = min(grid.spacing)
    n_freq = n_freq or 2 * max(grid.shape)
    k_max = k_max or np.pi / h
    dk = 2.0 * k_max / n_freq
    k = dk * (np.arange(n_freq) - n_freq // 2)
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    kx = np.cos(angles)[:, None] * k[None, :]
    ky = np.sin(angles)[:, None] * k[None, :]
    F = direct_transform_2d(grid.values, x_axis, y_axis, kx, ky)
    filt = act.filter(k)
    weight = KAPPA_2 * np.abs(k) * np.where(np.isfinite(filt), filt, 0.0)
    if np.any(~np.isfinite(filt)):
        out_of_band = np.abs(F[:, ~np.isfinite(filt)]).max(initial=0.0)
        if out_of_band > 1e-12 * np.abs(F).max(initial=1.0):
            return angles, None, None
    G = F * weight[None, :]
    # inverse along the slice; offsets share the frequency grid's reciprocal spacing
    n = n_freq
    dgamma = 2.0 * np.pi / (n * dk)
    offsets = dgamma * (np.arange(n) - n // 2)
    phase = np.exp(1j * np.outer(k, offsets))
    c = (G @ phase) * dk / (2.0 * np.pi)
    return angles, offsets, c.real


def radon_seminorm_estimate(grid, act: ActivationSpec, eta0=None, n_angles=180, n_freq=None, k_max=None):
    """Squared seminorm ``int c(xi, gamma)**2 / eta0 dxi dgamma`` over the cylinder grid.

    ``eta0`` is a callable ``(angles, offsets) -> density`` (broadcast over
    a meshgrid) or ``None`` for the uniform density 1. Returns ``inf`` where
    a zero density meets a nonzero profile, or when an infinite-penalty
    activation meets out-of-band spectral mass.
    """
    angles, offsets, c = slice_profiles(grid, act, n_angles, n_freq, k_max)
    if c is None:
        return np.inf
    if eta0 is None:
        density = np.ones_like(c)
    else:
        A, G = np.meshgrid(angles, offsets, indexing="ij")
        density = np.asarray(eta0(A, G), dtype=float)
    num = c**2
    zero = density <= 0
    if np.any(num[zero] > 1e-14 * num.max(initial=0.0)):
        return np.inf
    ratio = np.where(zero, 0.0, num / np.where(zero, 1.0, density))
    dtheta = 2.0 * np.pi / len(angles)
    dgamma = offsets[1] - offsets[0]
    return float(ratio.sum() * dtheta * dgamma)
