"""Fourier and Radon analysis of sampled functions on 2-D grids.

Transforms follow the package convention of :mod:`radonspline.fourier`.
Radon data live on the cylinder ``(theta, gamma)`` with ``xi = (cos theta,
sin theta)``.
"""
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .activations import ActivationSpec
from .fourier import direct_transform_2d, forward_1d, forward_nd, frequencies, inverse_1d
from .kernel import KAPPA_2
from .network import SplineParams, forward

GRID_MAGIC = b"GRID"
# lattice constant of sum' 1/|j| over Z^2 (Epstein zeta at s=1/2)
_EPSTEIN_HALF = -3.900264920001955


# ---- grid functions --------------------------------------------------------


@dataclass
class GridFunction:
    """Samples ``values[i, j, ...] = f(axes[0][i], axes[1][j], ...)``.

    ``source`` optionally keeps the callable the samples came from so that
    dilated copies can be resampled exactly; it is not serialized.
    """

    axes: tuple
    values: np.ndarray
    source: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ValueError("values shape does not match the axes")
        for a in self.axes:
            n = len(a)
            if n < 2 or n & (n - 1):
                raise ValueError("grid sizes must be powers of two")
            d = np.diff(a)
            if not np.allclose(d, d[0], rtol=1e-9, atol=0):
                raise ValueError("axes must be uniform")

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return self.values.shape

    @property
    def spacing(self):
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def origin(self):
        return tuple(float(a[0]) for a in self.axes)

    @property
    def extents(self):
        return tuple((float(a[0]), float(a[-1])) for a in self.axes)

    @property
    def cell(self):
        return float(np.prod(self.spacing))

    def points(self):
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @classmethod
    def sample(cls, fn, extents, shape):
        """Sample ``fn`` (points of shape (M, D) -> (M,)) on a uniform grid.

        Each axis is ``lo + j (hi - lo) / n`` for ``j < n``, so the grid is
        periodic-friendly: ``hi`` itself is not a sample.
        """
        axes = [lo + (hi - lo) * np.arange(n) / n for (lo, hi), n in zip(extents, shape)]
        g = cls(tuple(axes), np.zeros(tuple(shape)))
        g.values = np.asarray(fn(g.points()), dtype=float).reshape(tuple(shape))
        g.source = fn
        return g

    @classmethod
    def from_network(cls, s: SplineParams, act: ActivationSpec, extents, shape):
        def fn(P):
            out = forward(s, act, P)
            return out if out.ndim == 1 else out[:, 0]

        return cls.sample(fn, extents, shape)

    def dilated(self, eps):
        """``x -> f(x / eps)`` resampled on the same grid; needs ``source``."""
        if self.source is None:
            raise ValueError("dilation needs the sampling function")
        src = self.source
        g = GridFunction(self.axes, src(self.points() / eps).reshape(self.shape))
        g.source = lambda P: src(P / eps)
        return g


def hull_extents(X, margin=0.25):
    """Square extents covering the data box with a relative ``margin`` per side."""
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    half = 0.5 * (hi - lo).max() * (1.0 + 2.0 * margin)
    center = 0.5 * (lo + hi)
    half = max(half, 1e-12)
    return tuple((c - half, c + half) for c in center)


def save_grid(path, g: GridFunction):
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<I", g.dim))
        fh.write(struct.pack(f"<{g.dim}I", *g.shape))
        for a in g.axes:
            fh.write(struct.pack("<2d", a[0], a[1] - a[0]))
        fh.write(np.ascontiguousarray(g.values, dtype="<f8").tobytes())


def load_grid(path) -> GridFunction:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != GRID_MAGIC:
        raise ValueError(f"{path}: not a GRID file")
    (dim,) = struct.unpack_from("<I", raw, 4)
    pos = 8
    shape = struct.unpack_from(f"<{dim}I", raw, pos)
    pos += 4 * dim
    axes = []
    for n in shape:
        start, step = struct.unpack_from("<2d", raw, pos)
        pos += 16
        axes.append(start + step * np.arange(n))
    count = int(np.prod(shape))
    if len(raw) - pos != 8 * count:
        raise ValueError(f"{path}: truncated payload")
    values = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).reshape(shape)
    return GridFunction(tuple(axes), values.copy())


def l2_norm_sq(g: GridFunction) -> float:
    return float(np.sum(g.values**2) * g.cell)


# ---- spectra ---------------------------------------------------------------


@dataclass
class SpectralProfile:
    """Grid transform (FFT order) with its total-magnitude profile ``M(r)``."""

    F: np.ndarray
    k_axes: tuple
    radii: np.ndarray
    M: np.ndarray
    bin_width: float

    def k_norm(self):
        mesh = np.meshgrid(*self.k_axes, indexing="ij")
        return np.sqrt(sum(m**2 for m in mesh))

    def conjugate_symmetry_error(self):
        flipped = self.F
        for ax in range(self.F.ndim):
            flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
        scale = np.abs(self.F).max(initial=0.0)
        if scale == 0:
            return 0.0
        return float(np.abs(self.F - np.conj(flipped)).max() / scale)


def radial_profile(F, k_axes):
    """``M(r) = |int_{|k|=r} F dk|`` by nearest-bin annuli.

    The bin width is the smallest frequency step. Within a bin the complex
    values are averaged and the line integral is ``2 pi rbar`` times that
    mean, where ``rbar`` is the members' mean radius. The returned radii are
    these ``rbar``, which keeps the estimate exact to first order in the
    spread of member radii; empty bins report their nominal centre.
    """
    mesh = np.meshgrid(*k_axes, indexing="ij")
    r = np.sqrt(sum(m**2 for m in mesh)).ravel()
    dk = min(abs(a[1] - a[0]) for a in k_axes)
    idx = np.rint(r / dk).astype(int)
    # only annuli fully inside the frequency box are complete circles
    r_box = min(np.abs(a).max() for a in k_axes)
    n_bins = int(np.floor(r_box / dk)) + 1
    keep = idx < n_bins
    idx, r_in, vals = idx[keep], r[keep], np.asarray(F).ravel()[keep]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=vals.real, minlength=n_bins) + 1j * np.bincount(
        idx, weights=vals.imag, minlength=n_bins
    )
    rbar = np.bincount(idx, weights=r_in, minlength=n_bins)
    safe = np.maximum(counts, 1)
    mean = sums / safe
    rbar = np.where(counts > 0, rbar / safe, dk * np.arange(n_bins))
    return rbar, 2.0 * np.pi * rbar * np.abs(mean), dk


def fft_grid(f: GridFunction) -> SpectralProfile:
    F = forward_nd(f.values, f.spacing, f.origin)
    ks = tuple(frequencies(f.shape, f.spacing))
    radii, M, dk = radial_profile(F, ks)
    return SpectralProfile(F, ks, radii, M, dk)


def plancherel_ratio(f: GridFunction, prof: SpectralProfile | None = None) -> float:
    """Ratio of the spatial to the spectral ``L2`` energy; 1 up to rounding."""
    prof = prof or fft_grid(f)
    dk = np.prod([abs(a[1] - a[0]) for a in prof.k_axes])
    spectral = np.sum(np.abs(prof.F) ** 2) * dk / (2.0 * np.pi) ** f.dim
    return l2_norm_sq(f) / spectral


# ---- Radon transforms ------------------------------------------------------


@dataclass
class Sinogram:
    """Samples of a cylinder function at ``angles`` (rows) and ``offsets`` (columns).

    ``span`` is the angular range covered, ``pi`` or ``2 pi``. Half-range
    sinograms rely on the evenness ``g(-xi, -gamma) = g(xi, gamma)``.
    """

    angles: np.ndarray
    offsets: np.ndarray
    values: np.ndarray
    span: float = np.pi

    @property
    def d_offset(self):
        return float(self.offsets[1] - self.offsets[0])


def _offset_axis(g: GridFunction, n_offsets):
    reach = max(max(abs(lo), abs(hi)) for lo, hi in g.extents) * np.sqrt(2.0)
    return np.linspace(-reach, reach, n_offsets)


def radon_2d(f: GridFunction, n_angles=180, n_offsets=None, span=np.pi) -> Sinogram:
    """Line integrals ``int_{<xi,x>=gamma} f`` by bilinear interpolation.

    Each ray is sampled at half the grid spacing; ``f`` is taken as zero
    outside the grid.
    """
    if f.dim != 2:
        raise ValueError("radon_2d needs a 2-D grid")
    n_offsets = n_offsets or 2 * max(f.shape) + 1
    offsets = _offset_axis(f, n_offsets)
    angles = span * np.arange(n_angles) / n_angles
    ds = 0.5 * min(f.spacing)
    reach = offsets[-1]
    t = np.arange(-reach, reach + ds, ds)
    (x0, y0), (hx, hy) = f.origin, f.spacing
    out = np.empty((n_angles, n_offsets))
    G, T = np.meshgrid(offsets, t, indexing="ij")
    for j, th in enumerate(angles):
        c, s = np.cos(th), np.sin(th)
        px = G * c - T * s
        py = G * s + T * c
        coords = np.stack([(px - x0) / hx, (py - y0) / hy])
        vals = ndimage.map_coordinates(f.values, coords.reshape(2, -1), order=1, mode="constant", cval=0.0)
        out[j] = vals.reshape(G.shape).sum(axis=1) * ds
    return Sinogram(angles, offsets, out, span)


def dual_radon_2d(sino: Sinogram, axes) -> GridFunction:
    """``R* g(x) = int_{S^1} g(xi, <xi, x>) dxi`` by linear interpolation in ``gamma``."""
    x_axis, y_axis = (np.asarray(a, dtype=float) for a in axes)
    X, Y = np.meshgrid(x_axis, y_axis, indexing="ij")
    acc = np.zeros(X.shape)
    for th, row in zip(sino.angles, sino.values):
        gam = X * np.cos(th) + Y * np.sin(th)
        acc += np.interp(gam, sino.offsets, row, left=0.0, right=0.0)
    dtheta = sino.span / len(sino.angles)
    # a half-range sinogram stands for both halves of the circle
    acc *= dtheta * (2.0 * np.pi / sino.span)
    return GridFunction((x_axis, y_axis), acc)


def ramp_filter(sino: Sinogram, pad=4) -> Sinogram:
    """Apply ``(-d^2/dgamma^2)^(1/2)``, the ``|theta|`` multiplier, along each row."""
    n = len(sino.offsets)
    m = 1 << int(np.ceil(np.log2(pad * n)))
    h = sino.d_offset
    padded = np.zeros((sino.values.shape[0], m))
    padded[:, :n] = sino.values
    spec = forward_1d(padded, h, sino.offsets[0])
    k = 2.0 * np.pi * np.fft.fftfreq(m, d=h)
    out = inverse_1d(spec * np.abs(k), h, sino.offsets[0]).real[:, :n]
    return Sinogram(sino.angles, sino.offsets, out, sino.span)


def radon_inversion(sino: Sinogram, axes) -> GridFunction:
    """``f = kappa_2 R*{|theta| R f}`` evaluated on ``axes``."""
    back = dual_radon_2d(ramp_filter(sino), axes)
    back.values *= KAPPA_2
    return back


def central_slice_error(f: GridFunction, sino: Sinogram | None = None, n_angles=32) -> float:
    """Relative l2 gap between the 1-D transforms of the sinogram rows and
    the matching central slices of the 2-D transform."""
    sino = sino or radon_2d(f, n_angles=n_angles)
    n = len(sino.offsets)
    h = sino.d_offset
    Fg = forward_1d(sino.values, h, sino.offsets[0])
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    # compare inside the grid's band only
    band = np.abs(k) <= np.pi / max(f.spacing)
    kx = np.cos(sino.angles)[:, None] * k[None, band]
    ky = np.sin(sino.angles)[:, None] * k[None, band]
    F2 = direct_transform_2d(f.values, f.axes[0], f.axes[1], kx, ky)
    return float(np.linalg.norm(Fg[:, band] - F2) / np.linalg.norm(F2))


# ---- objectives ------------------------------------------------------------


@dataclass
class ObjectiveValue:
    variant: str
    cylinder: float
    euclidean: float

    @property
    def discrepancy(self):
        if not np.isfinite(self.cylinder) or not np.isfinite(self.euclidean):
            return 0.0 if self.cylinder == self.euclidean else np.inf
        scale = max(abs(self.cylinder), abs(self.euclidean))
        return 0.0 if scale == 0 else abs(self.cylinder - self.euclidean) / scale


def _radial_weight(variant, act, k):
    """Per-slice multiplier ``w(theta)`` applied to ``F(theta xi)``; D = 2."""
    k = np.abs(k)
    if variant == "O1":
        return np.ones_like(k, dtype=complex)
    if variant == "O2":
        return k.astype(complex)
    if variant == "O3":
        if act is None:
            raise ValueError("O3 needs an activation")
        return k * act.filter(k)
    raise ValueError(f"unknown objective variant {variant!r}")


def _out_of_band(F, weight, rel=1e-12):
    bad = ~np.isfinite(weight)
    if not np.any(bad):
        return False
    return np.abs(F[..., bad]).max(initial=0.0) > rel * np.abs(F).max(initial=1.0)


def objective_cylinder(variant, f: GridFunction, act=None, n_angles=256, n_freq=None):
    """``int_{S^1 x R} (F_gamma^{-1}[w F(theta xi)](gamma))^2 dxi dgamma``, scaled by ``2 pi``.

    The ``2 pi`` restores the frequency-side normalization in which the
    Euclidean form carries no Plancherel constant.
    """
    x_axis, y_axis = f.axes
    h = min(f.spacing)
    n_freq = n_freq or 2 * max(f.shape)
    k_max = np.pi / h
    dk = 2.0 * k_max / n_freq
    k = dk * (np.arange(n_freq) - n_freq // 2)
    angles = 2.0 * np.pi * np.arange(n_angles) / n_angles
    kx = np.cos(angles)[:, None] * k[None, :]
    ky = np.sin(angles)[:, None] * k[None, :]
    F = direct_transform_2d(f.values, x_axis, y_axis, kx, ky)
    w = _radial_weight(variant, act, k)
    if _out_of_band(F, w):
        return np.inf
    G = F * np.where(np.isfinite(w), w, 0.0)[None, :]
    dgamma = 2.0 * np.pi / (n_freq * dk)
    offsets = dgamma * (np.arange(n_freq) - n_freq // 2)
    c = (G @ np.exp(1j * np.outer(k, offsets))) * dk / (2.0 * np.pi)
    dtheta = 2.0 * np.pi / n_angles
    return float(2.0 * np.pi * np.sum(np.abs(c) ** 2) * dtheta * dgamma)


def objective_euclidean(variant, f: GridFunction, act=None, pad=4):
    """``2 int_{R^2} W(k) |F(k)|^2 dk`` on the zero-padded FFT grid.

    ``W`` is ``1/k``, ``k`` and ``k rho_phi(k)`` for O1, O2, O3. The O1
    weight is singular at the origin; the punctured lattice sum is corrected
    with the square-lattice constant of ``sum' 1/|j|``. The remaining O1
    error falls as ``dk**3``, hence the default fourfold padding.
    """
    if f.dim != 2:
        raise ValueError("objectives are implemented for D = 2")
    padded = np.zeros(tuple(pad * n for n in f.shape))
    padded[tuple(slice(0, n) for n in f.shape)] = f.values
    F = forward_nd(padded, f.spacing, f.origin)
    kx, ky = frequencies(padded.shape, f.spacing)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    r = np.hypot(KX, KY)
    cell = abs(kx[1] - kx[0]) * abs(ky[1] - ky[0])
    P = np.abs(F) ** 2
    if variant == "O1":
        dkx, dky = abs(kx[1] - kx[0]), abs(ky[1] - ky[0])
        if not np.isclose(dkx, dky, rtol=1e-9):
            raise ValueError("O1 needs equal frequency steps on both axes")
        inv = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
        total = np.sum(P * inv) * cell - _EPSTEIN_HALF * dkx * P[0, 0]
        return float(2.0 * total)
    # |w|^2 / k with w from the slice form; the origin term vanishes
    w = np.abs(_radial_weight(variant, act, r.ravel())).reshape(r.shape) ** 2 / np.maximum(r, 1e-300)
    if _out_of_band(F.ravel(), w.ravel()):
        return np.inf
    w = np.where(np.isfinite(w), w, 0.0)
    return float(2.0 * np.sum(w * P) * cell)


def objective_O(variant, f: GridFunction, act: ActivationSpec | None = None, n_angles=256) -> ObjectiveValue:
    """Evaluate one of the O1/O2/O3 objectives in both coordinate systems.

    Overflowing penalties (for example a Gaussian activation against a
    slowly decaying spectrum) are reported as ``inf``.
    """
    if f.dim != 2:
        raise ValueError("objectives are implemented for D = 2")
    if variant == "O3" and act is None:
        raise ValueError("O3 needs an activation")
    with np.errstate(over="ignore", invalid="ignore"):
        cyl = objective_cylinder(variant, f, act, n_angles=n_angles)
        euc = objective_euclidean(variant, f, act)
    cyl = cyl if np.isfinite(cyl) else np.inf
    euc = euc if np.isfinite(euc) and euc < 1e300 else np.inf
    return ObjectiveValue(variant, cyl, euc)


# ---- Dirac-line representation --------------------------------------------


@dataclass
class DiracLineSpectrum:
    """Each neuron's transform is a weighted line through the origin along ``xi_i``.

    ``weights(u)[i]`` is ``mu_i exp(-i gamma_i u) F[phi_{omega_i}](u)``, the
    per-neuron line density in the coordinate ``u = <k, xi_i>``. On ``R^2``
    the full transform carries an extra ``2 pi`` from the transverse delta.
    """

    xi: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    act: ActivationSpec

    def weights(self, u):
        u = np.asarray(u, dtype=float)
        rows = []
        for g, m, w in zip(self.gamma, self.mu, self.omega):
            base = self.act.rescaled(w).transform(u)
            rows.append(m * np.exp(-1j * g * u) * base)
        return np.array(rows)

    def project(self, k_axes, width=None):
        """Accumulate the lines on a frequency grid with a Gaussian transverse profile.

        ``width`` is the profile's standard deviation; the default is one
        grid step. Each profile integrates to one across the line.
        """
        kx, ky = (np.asarray(a, dtype=float) for a in k_axes)
        KX, KY = np.meshgrid(kx, ky, indexing="ij")
        width = width or min(abs(kx[1] - kx[0]), abs(ky[1] - ky[0]))
        out = np.zeros(KX.shape, dtype=complex)
        D = self.xi.shape[1]
        for i in range(len(self.gamma)):
            u = KX * self.xi[i, 0] + KY * self.xi[i, 1]
            t = -KX * self.xi[i, 1] + KY * self.xi[i, 0]
            prof = np.exp(-0.5 * (t / width) ** 2) / (np.sqrt(2.0 * np.pi) * width)
            w = self.mu[i] * np.exp(-1j * self.gamma[i] * u) * self.act.rescaled(self.omega[i]).transform(u)
            out += (2.0 * np.pi) ** (D - 1) * w * prof
        return out

    def radial_magnitude(self, r):
        """Exact ``M(r)``: each line crosses the circle of radius ``r`` twice."""
        r = np.asarray(r, dtype=float)
        W = self.weights(r).sum(axis=0)
        # the crossing at -r xi contributes the conjugate for real phi
        return 2.0 * np.pi * np.abs(2.0 * W.real)


def dirac_line_spectrum(s: SplineParams, act: ActivationSpec) -> DiracLineSpectrum:
    if s.dim != 2:
        raise ValueError("line spectra are implemented for D = 2")
    mu = s.mu if s.mu.ndim == 1 else s.mu[:, 0]
    return DiracLineSpectrum(s.xi.copy(), s.gamma.copy(), mu.copy(), s.omega.copy(), act)


# ---- contractions ----------------------------------------------------------


@dataclass
class ContractionRow:
    eps: float
    penalty: float
    predicted: float
    leakage: float


def _spectral_leakage(F, k_axes, frac=0.9):
    mesh = np.meshgrid(*k_axes, indexing="ij")
    edge = np.zeros(F.shape, dtype=bool)
    for m, a in zip(mesh, k_axes):
        edge |= np.abs(m) > frac * np.abs(a).max()
    total = np.sum(np.abs(F) ** 2)
    return 0.0 if total == 0 else float(np.sum(np.abs(F[edge]) ** 2) / total)


def _penalty_sum(F, k_axes, rho, cell, floor=0.0):
    KX, KY = np.meshgrid(*k_axes, indexing="ij")
    r = np.hypot(KX, KY)
    # values under the floor are FFT round-off, not spectrum
    F = np.where(np.abs(F) >= floor * np.abs(F).max(), F, 0.0)
    with np.errstate(over="ignore"):
        w = r * rho(r.ravel()).reshape(r.shape)
    if _out_of_band(F.ravel(), w.ravel()):
        return np.inf
    return float(2.0 * np.sum(np.where(np.isfinite(w), w, 0.0) * np.abs(F) ** 2) * cell)


def contraction_check(f: GridFunction, act: ActivationSpec, eps_list, max_leakage=0.01, floor=1e-12):
    """Penalty of ``f(x / eps)`` directly and through the dilated-activation identity.

    Direct: resample the contraction on the same grid and evaluate
    ``2 int k rho_phi(k) |F[f_eps]|^2``. Predicted: ``eps^-1`` times the same
    integral of ``f`` itself with ``rho_{phi_eps}(k) = eps^2 rho_phi(k / eps)``.
    Raises ``ValueError`` if a contraction puts more than ``max_leakage`` of
    its spectral energy near the grid's band edge. Transform values below
    ``floor`` times the peak are dropped before weighting, since fast-growing
    penalties would otherwise amplify round-off.
    """
    base = fft_grid(f)
    cell = np.prod([abs(a[1] - a[0]) for a in base.k_axes])
    rows = []
    for eps in eps_list:
        g = f.dilated(eps)
        prof = fft_grid(g)
        leak = _spectral_leakage(prof.F, prof.k_axes)
        if leak > max_leakage:
            raise ValueError(f"contraction eps={eps} leaks {leak:.2%} of its energy to the band edge")
        direct = _penalty_sum(prof.F, prof.k_axes, act.penalty, cell, floor)

        def rho_eps(k, eps=eps):
            return eps**2 * act.penalty(k / eps)

        predicted = _penalty_sum(base.F, base.k_axes, rho_eps, cell, floor) / eps
        rows.append(ContractionRow(float(eps), direct, predicted, leak))
    return rows


# ---- fractional derivatives ------------------------------------------------


def fractional_filter_apply(g, lam, h, side="right", method="grunwald", pad=4):
    """Multiply the 1-D transform of ``g`` by ``(ik)^lam`` (principal branch).

    ``method="grunwald"`` uses the backward-difference symbol
    ``((1 - exp(-ikh)) / h)^lam``, which reproduces repeated finite
    differences exactly for integer ``lam`` and keeps point masses inside
    one cell. ``method="exact"`` uses ``(ik)^lam`` itself. The signal is
    zero-padded after its last sample so the causal stencil does not wrap.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if side != "right":
        raise ValueError("only the right-sided operator is provided")
    g = np.asarray(g, dtype=float)
    n = g.shape[-1]
    m = 1 << int(np.ceil(np.log2(pad * n)))
    padded = np.zeros(g.shape[:-1] + (m,))
    padded[..., :n] = g
    k = 2.0 * np.pi * np.fft.fftfreq(m, d=h)
    if method == "grunwald":
        symbol = ((1.0 - np.exp(-1j * k * h)) / h) ** lam
    elif method == "exact":
        symbol = (1j * k) ** lam
    else:
        raise ValueError(f"unknown method {method!r}")
    out = np.fft.ifft(np.fft.fft(padded, axis=-1) * symbol, axis=-1)
    return out.real[..., :n]
