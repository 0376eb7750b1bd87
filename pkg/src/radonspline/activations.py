"""Activation catalog with analytic Fourier filters and spectral penalties.

Every activation carries four callables: ``eval`` (phi), ``deriv`` (phi'),
``filter`` (the reciprocal transform ``1 / F[phi](k)``) and ``penalty``
(``|filter|**2``). Transforms use the forward kernel ``exp(-ikz)``.
"""
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np
from scipy import special

from .fourier import FrequencyGrid, forward_1d, inverse_1d


class ActivationError(ValueError):
    """Raised for unknown activations, bad shape parameters or invalid use."""


def _rect(t):
    t = np.abs(t)
    return np.where(t < 0.5, 1.0, np.where(t == 0.5, 0.5, 0.0))


def _tri(t):
    return np.clip(1.0 - np.abs(t), 0.0, None)


def _heaviside(z):
    return np.heaviside(z, 0.5)


def _sinhc(x):
    # sinh(x)/x with the removable singularity filled in
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nz = x != 0
    with np.errstate(over="ignore"):
        out[nz] = np.sinh(x[nz]) / x[nz]
    return out


def _safe_ratio(num, den, limit):
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    out = np.full(np.broadcast(num, den).shape, complex(np.inf, 0.0))
    num, den = np.broadcast_arrays(num, den)
    nz = den != 0
    out[nz] = num[nz] / den[nz]
    zero_both = (~nz) & (num == 0)
    out[zero_both] = limit
    return out


@dataclass(frozen=True)
class ActivationSpec:
    """An activation with its transform data. Immutable once built."""

    name: str
    shape_params: Mapping[str, float]
    eval_fn: Callable = field(repr=False, compare=False)
    deriv_fn: Callable = field(repr=False, compare=False)
    filter_fn: Callable = field(repr=False, compare=False)
    homogeneous: bool = False
    pointwise: bool = True
    # central differences needed before phi has an ordinary transform
    growth_order: int = 0

    def eval(self, z):
        if not self.pointwise:
            raise ActivationError(f"{self.name} is analysis-only and has no pointwise values")
        return self.eval_fn(np.asarray(z, dtype=float))

    def deriv(self, z):
        if not self.pointwise:
            raise ActivationError(f"{self.name} is analysis-only and has no pointwise values")
        return self.deriv_fn(np.asarray(z, dtype=float))

    def filter(self, k):
        """Reciprocal transform ``1 / F[phi](k)``; ``inf`` where the transform vanishes."""
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(self.filter_fn(np.asarray(k, dtype=float)), dtype=complex)

    def penalty(self, k):
        """Spectral penalty ``|F[phi](k)|**-2`` with ``+inf`` as the infinite sentinel."""
        f = self.filter(k)
        with np.errstate(over="ignore"):
            out = np.abs(f) ** 2
        return np.where(np.isfinite(f), out, np.inf)

    def transform(self, k):
        """``F[phi](k)`` itself; zero where the filter is infinite."""
        f = self.filter(k)
        out = np.zeros(f.shape, dtype=complex)
        ok = np.isfinite(f) & (f != 0)
        out[ok] = 1.0 / f[ok]
        out[f == 0] = complex(np.inf, 0.0)
        return out

    @property
    def label(self) -> str:
        if not self.shape_params:
            return self.name.lower()
        params = ",".join(f"{k}={v:g}" for k, v in sorted(self.shape_params.items()))
        return f"{self.name.lower()}:{params}"

    def rescaled(self, omega):
        return RescaledActivation(self, omega)


class RescaledActivation:
    """Horizontal rescaling ``z -> phi(omega z) / omega``."""

    def __init__(self, base: ActivationSpec, omega: float):
        if not omega > 0:
            raise ActivationError("omega must be positive")
        self.base = base
        self.omega = float(omega)

    def eval(self, z):
        z = np.asarray(z, dtype=float)
        if self.base.homogeneous:
            return self.base.eval(z)
        return self.base.eval(self.omega * z) / self.omega

    def deriv(self, z):
        return self.base.deriv(self.omega * np.asarray(z, dtype=float))

    def transform(self, k):
        # int phi(w z)/w e^{-ikz} dz = F[phi](k/w) / w**2
        return self.base.transform(np.asarray(k, dtype=float) / self.omega) / self.omega**2


def _kink_value(kink):
    if kink == "zero":
        return 0.0
    if kink == "right":
        return 1.0
    raise ActivationError("kink must be 'zero' or 'right'")


# ---- catalog builders ------------------------------------------------------
# each returns (eval, deriv, filter, flags)


def _dirac(p, kink):
    def nope(z):
        raise ActivationError("Dirac is analysis-only")

    return nope, nope, lambda k: np.ones_like(k, dtype=complex), dict(pointwise=False)


def _step(p, kink):
    def deriv(z):
        return np.zeros_like(z)

    return _heaviside, deriv, lambda k: 1j * k, dict(growth_order=1)


def _relu(p, kink):
    right = _kink_value(kink)

    def deriv(z):
        return np.where(z > 0, 1.0, np.where(z == 0, right, 0.0))

    return (lambda z: np.maximum(z, 0.0)), deriv, (lambda k: -(k**2) + 0j), dict(
        homogeneous=True, growth_order=2
    )


def _power_relu(p, kink):
    lam = p["lam"]
    g = special.gamma(lam)
    right = _kink_value(kink)

    def ev(z):
        if lam == 1.0:
            return _heaviside(z)
        zp = np.where(z > 0, z, 1.0)
        return np.where(z > 0, zp ** (lam - 1.0) / g, 0.0)

    def deriv(z):
        if lam == 1.0:
            return np.zeros_like(z)
        if lam == 2.0:
            return np.where(z > 0, 1.0, np.where(z == 0, right, 0.0))
        zp = np.where(z > 0, z, 1.0)
        return np.where(z > 0, (lam - 1.0) * zp ** (lam - 2.0) / g, 0.0)

    def filt(k):
        # principal branch of (ik)**lam
        return np.abs(k) ** lam * np.exp(1j * np.pi * lam * np.sign(k) / 2.0)

    return ev, deriv, filt, dict(homogeneous=lam == 2.0, growth_order=int(math.ceil(lam)))


def _logistic_bump(p, kink):
    s = p["sigma"]

    def ev(z):
        e = special.expit(s * z)
        return s * e * (1.0 - e)

    def deriv(z):
        e = special.expit(s * z)
        return s * s * e * (1.0 - e) * (1.0 - 2.0 * e)

    return ev, deriv, lambda k: _sinhc(np.pi * k / s) + 0j, {}


def _sigmoid(p, kink):
    s = p["sigma"]

    def deriv(z):
        e = special.expit(s * z)
        return s * e * (1.0 - e)

    def filt(k):
        with np.errstate(over="ignore"):
            return 1j * s / np.pi * np.sinh(np.pi * k / s)

    return (lambda z: special.expit(s * z)), deriv, filt, dict(growth_order=1)


def _softplus(p, kink):
    s = p["sigma"]

    def filt(k):
        with np.errstate(over="ignore"):
            return -s * k / np.pi * np.sinh(np.pi * k / s) + 0j

    return (
        (lambda z: np.logaddexp(0.0, s * z) / s),
        (lambda z: special.expit(s * z)),
        filt,
        dict(growth_order=2),
    )


def _cauchy(p, kink):
    s = p["sigma"]

    def ev(z):
        return 1.0 / (np.pi * s * (1.0 + (z / s) ** 2))

    def deriv(z):
        return -2.0 * z / (np.pi * s**3 * (1.0 + (z / s) ** 2) ** 2)

    def filt(k):
        with np.errstate(over="ignore"):
            return np.exp(s * np.abs(k)) + 0j

    return ev, deriv, filt, {}


def _arctangent(p, kink):
    s = p["sigma"]

    def deriv(z):
        return 1.0 / (np.pi * s * (1.0 + (z / s) ** 2))

    def filt(k):
        # sign fixed by the exp(-ikz) convention: phi' is the Cauchy density
        with np.errstate(over="ignore"):
            return 1j * k * np.exp(s * np.abs(k))

    return (lambda z: np.arctan(z / s) / np.pi), deriv, filt, dict(growth_order=1)


def _gaussian(p, kink):
    s = p["sigma"]
    c = 1.0 / (s * math.sqrt(2.0 * math.pi))

    def ev(z):
        return c * np.exp(-0.5 * (z / s) ** 2)

    def deriv(z):
        return -z / s**2 * ev(z)

    def filt(k):
        with np.errstate(over="ignore"):
            return np.exp(0.5 * (s * k) ** 2) + 0j

    return ev, deriv, filt, {}


def _erf(p, kink):
    s = p["sigma"]
    c = 1.0 / (s * math.sqrt(2.0 * math.pi))

    def filt(k):
        # sign fixed by the exp(-ikz) convention: phi' is the Gaussian density
        with np.errstate(over="ignore"):
            return 1j * k * np.exp(0.5 * (s * k) ** 2)

    return (
        (lambda z: 0.5 * special.erf(z / (s * math.sqrt(2.0)))),
        (lambda z: c * np.exp(-0.5 * (z / s) ** 2)),
        filt,
        dict(growth_order=1),
    )


def _g_function(p, kink):
    n = int(p["n"])
    s = p["sigma"]
    if n != p["n"] or not 1 <= n <= 6:
        raise ActivationError("G-function order n must be an integer in 1..6")

    def filt(k):
        with np.errstate(over="ignore"):
            return np.exp((s * np.abs(k)) ** n / n ** (n - 1)) + 0j

    if n == 1:
        ev, deriv, _, _ = _cauchy({"sigma": s}, kink)
    elif n == 2:
        ev, deriv, _, _ = _gaussian({"sigma": s}, kink)
    else:
        z_tab, phi_tab = _g_table(n, s)
        dphi = np.gradient(phi_tab, z_tab)

        def ev(z):
            return np.interp(z, z_tab, phi_tab, left=0.0, right=0.0)

        def deriv(z):
            return np.interp(z, z_tab, dphi, left=0.0, right=0.0)

    return ev, deriv, filt, {}


@lru_cache(maxsize=16)
def _g_table(n, sigma):
    z, phi = g_family_approx(n, sigma)
    return z, phi


def _satrelu(p, kink):
    d = p["delta"]
    right = _kink_value(kink)

    def ev(z):
        return np.maximum(z, 0.0) - np.maximum(z - d, 0.0)

    def deriv(z):
        inside = (z > 0) & (z < d)
        at0 = np.where(z == 0, right, 0.0)
        return np.where(inside, 1.0, at0)

    def filt(k):
        return _safe_ratio(-(k**2), 1.0 - np.exp(-1j * d * k), limit=0.0)

    return ev, deriv, filt, dict(growth_order=1)


def _wavepacket(p, kink):
    w = p["omega"]
    s = p["sigma"]
    c = 1.0 / (s * math.sqrt(2.0 * math.pi))

    def ev(z):
        return c * np.cos(w * z) * np.exp(-0.5 * (z / s) ** 2)

    def deriv(z):
        g = np.exp(-0.5 * (z / s) ** 2)
        return c * g * (-w * np.sin(w * z) - z / s**2 * np.cos(w * z))

    def filt(k):
        den = np.exp(-0.5 * s**2 * (k + w) ** 2) + np.exp(-0.5 * s**2 * (k - w) ** 2)
        with np.errstate(divide="ignore"):
            return 2.0 / den + 0j

    return ev, deriv, filt, {}


def _rectangle(p, kink):
    a = p["a"]

    def filt(k):
        return _safe_ratio(k, 2.0 * np.sin(k / (2.0 * a)), limit=a)

    return (lambda z: _rect(a * z)), (lambda z: np.zeros_like(z)), filt, {}


def _triangle(p, kink):
    a = p["a"]

    def deriv(z):
        t = a * z
        return np.where(np.abs(t) < 1, -a * np.sign(t), 0.0)

    def filt(k):
        return _safe_ratio(k**2, 4.0 * a * np.sin(k / (2.0 * a)) ** 2, limit=a)

    return (lambda z: _tri(a * z)), deriv, filt, {}


def _sinc(p, kink):
    a = p["a"]

    def deriv(z):
        t = np.pi * a * z
        ts = np.where(t == 0, 1.0, t)
        return np.where(t == 0, 0.0, np.pi * a * (np.cos(ts) * ts - np.sin(ts)) / ts**2)

    def filt(k):
        r = _rect(k / (2.0 * np.pi * a))
        with np.errstate(divide="ignore"):
            return np.where(r > 0, a / np.where(r > 0, r, 1.0), np.inf) + 0j

    return (lambda z: np.sinc(a * z)), deriv, filt, {}


def _squared_sinc(p, kink):
    a = p["a"]

    def deriv(z):
        t = np.pi * a * z
        ts = np.where(t == 0, 1.0, t)
        s = np.sin(ts)
        d = 2.0 * s * (np.cos(ts) * ts - s) / ts**3
        return np.where(t == 0, 0.0, np.pi * a * d)

    def filt(k):
        r = _tri(k / (2.0 * np.pi * a))
        return np.where(r > 0, a / np.where(r > 0, r, 1.0), np.inf) + 0j

    return (lambda z: np.sinc(a * z) ** 2), deriv, filt, {}


def _half_exponential(p, kink):
    a = p["a"]

    def ev(z):
        zp = np.where(z > 0, z, 0.0)
        return np.where(z > 0, np.exp(-a * zp), np.where(z == 0, 0.5, 0.0))

    def deriv(z):
        zp = np.where(z > 0, z, 0.0)
        return np.where(z > 0, -a * np.exp(-a * zp), 0.0)

    return ev, deriv, lambda k: a + 1j * k, {}


def _sech(p, kink):
    a = p["a"]

    def ev(z):
        return 1.0 / np.cosh(a * z)

    def deriv(z):
        return -a * np.tanh(a * z) / np.cosh(a * z)

    def filt(k):
        with np.errstate(over="ignore"):
            return a / np.pi * np.cosh(np.pi * k / (2.0 * a)) + 0j

    return ev, deriv, filt, {}


def _log_absolute(p, kink):
    def ev(z):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(z))

    def deriv(z):
        with np.errstate(divide="ignore"):
            return 1.0 / z

    return ev, deriv, lambda k: -np.abs(k) / np.pi + 0j, {}


def _oberhettinger_iii10(p, kink):
    nu = p["nu"]
    b = p["b"]
    pref = math.sqrt(b) / (2.0 ** (nu - 0.5) * special.gamma(nu))

    def ev(z):
        zz = np.where(z > b, z, 2.0 * b)
        return np.where(z > b, (zz - b) ** (nu - 1.0) * (zz + b) ** (-nu - 0.5), 0.0)

    def deriv(z):
        zz = np.where(z > b, z, 2.0 * b)
        val = (zz - b) ** (nu - 1.0) * (zz + b) ** (-nu - 0.5)
        d = val * ((nu - 1.0) / (zz - b) - (nu + 0.5) / (zz + b))
        return np.where(z > b, d, 0.0)

    def filt(k):
        return pref / _parabolic_cylinder(-2.0 * nu, b, np.asarray(k, dtype=float))

    return ev, deriv, filt, {}


def _parabolic_cylinder(order, b, k):
    # D_order(2 sqrt(i b k)), principal branch; scipy only covers real arguments
    import mpmath

    flat = k.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for j, kk in enumerate(flat):
        arg = 2.0 * mpmath.sqrt(1j * b * float(kk))
        out[j] = complex(mpmath.pcfd(order, arg))
    return out.reshape(k.shape)


_CATALOG = {
    "Dirac": (_dirac, {}),
    "Step": (_step, {}),
    "ReLU": (_relu, {}),
    "PowerReLU": (_power_relu, {"lam": None}),
    "LogisticBump": (_logistic_bump, {"sigma": 1.0}),
    "Sigmoid": (_sigmoid, {"sigma": 1.0}),
    "SoftPlus": (_softplus, {"sigma": 1.0}),
    "Cauchy": (_cauchy, {"sigma": 1.0}),
    "Arctangent": (_arctangent, {"sigma": 1.0}),
    "Gaussian": (_gaussian, {"sigma": 1.0}),
    "Erf": (_erf, {"sigma": 1.0}),
    "GFunction": (_g_function, {"n": 3, "sigma": 1.0}),
    "SatReLU": (_satrelu, {"delta": 1.0}),
    "Wavepacket": (_wavepacket, {"omega": 10.0, "sigma": 0.7}),
    "Rectangle": (_rectangle, {"a": 1.0}),
    "Triangle": (_triangle, {"a": 1.0}),
    "Sinc": (_sinc, {"a": 1.0}),
    "SquaredSinc": (_squared_sinc, {"a": 1.0}),
    "HalfExponential": (_half_exponential, {"a": 1.0}),
    "HyperbolicSecant": (_sech, {"a": 1.0}),
    "LogAbsolute": (_log_absolute, {}),
    "OberhettingerIII10": (_oberhettinger_iii10, {"nu": 2.0, "b": 1.0}),
}

_ALIASES = {
    "logistic": "Sigmoid",
    "logisticbump": "LogisticBump",
    "powerrelu": "PowerReLU",
    "halfexp": "HalfExponential",
    "sech": "HyperbolicSecant",
    "logabs": "LogAbsolute",
    "atan": "Arctangent",
    "arctan": "Arctangent",
    "gfunction": "GFunction",
    "g-function": "GFunction",
    "oberhettinger": "OberhettingerIII10",
}

_PARAM_ALIASES = {"lambda": "lam", "Δ": "delta", "σ": "sigma", "ω": "omega", "λ": "lam", "ν": "nu"}


def catalog_names():
    return list(_CATALOG)


def _canonical(name):
    key = name.replace("_", "").replace(" ", "").lower()
    for canon in _CATALOG:
        if canon.lower() == key:
            return canon
    if key in _ALIASES:
        return _ALIASES[key]
    raise ActivationError(f"unknown activation {name!r}")


def catalog_lookup(name: str, shape_params: Mapping[str, float] | None = None, kink: str = "zero"):
    """Build an :class:`ActivationSpec` by catalog name.

    ``kink`` picks the derivative value at non-differentiable points:
    ``"zero"`` (default) or the right limit ``"right"``.
    """
    canon = _canonical(name)
    builder, defaults = _CATALOG[canon]
    params = {}
    given = {_PARAM_ALIASES.get(k, k): float(v) for k, v in (shape_params or {}).items()}
    unknown = set(given) - set(defaults)
    if unknown:
        raise ActivationError(f"{canon} takes no parameter(s) {sorted(unknown)}")
    for key, default in defaults.items():
        value = given.get(key, default)
        if value is None:
            raise ActivationError(f"{canon} requires shape parameter {key!r}")
        if not np.isfinite(value) or value <= 0:
            raise ActivationError(f"{canon} parameter {key!r} must be positive, got {value}")
        params[key] = float(value)
    ev, deriv, filt, flags = builder(params, kink)
    return ActivationSpec(canon, dict(params), ev, deriv, filt, **flags)


def parse_activation(text: str, kink: str = "zero") -> ActivationSpec:
    """Parse CLI strings such as ``relu`` or ``sinc:a=0.75`` or ``wavepacket:omega=20,sigma=0.1``."""
    name, _, rest = text.partition(":")
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise ActivationError(f"malformed shape parameter {item!r}")
        params[key.strip()] = float(value)
    return catalog_lookup(name.strip(), params, kink=kink)


def eval_batch(spec: ActivationSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ActivationError("eval_batch requires finite inputs")
    return spec.eval(z)


# ---- design ---------------------------------------------------------------


def design_activation(rho, phase_rule="real_even", grid: FrequencyGrid | None = None, floor=1e-12):
    """Sample the activation whose spectral penalty is ``rho``.

    The transform is ``phase(k) / sqrt(rho(k))`` with phase 1 (``real_even``)
    or ``-i sign(k)`` (``causal_step``). Frequencies where the target
    magnitude falls below ``floor`` times its peak are outside the passband
    and set to zero, as are isolated zeros of rho (a single-bin DC zero is
    allowed; the result is then defined up to that component).

    Returns ``(z, phi)``.
    """
    grid = grid or FrequencyGrid()
    k = grid.k
    # exponential penalties overflow to inf past the passband, which is handled below
    with np.errstate(over="ignore"):
        r = np.asarray(rho(k), dtype=float)
    if r.shape != k.shape:
        r = np.broadcast_to(r, k.shape).astype(float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise ActivationError("rho must be nonnegative")
    zero = r == 0
    if np.count_nonzero(zero) > 1:
        raise ActivationError("rho vanishes on more than an isolated frequency; not invertible")
    with np.errstate(divide="ignore", over="ignore"):
        mag = np.where(zero | ~np.isfinite(r), 0.0, 1.0 / np.sqrt(np.where(zero, 1.0, r)))
    peak = mag.max()
    if not peak > 0:
        raise ActivationError("rho is infinite everywhere on the grid")
    passband = mag >= floor * peak
    if np.count_nonzero(passband) < 8:
        raise ActivationError("rho grows faster than the grid can resolve; widen the grid")
    mag = np.where(passband, mag, 0.0)
    if phase_rule == "real_even":
        phase = np.ones_like(k, dtype=complex)
    elif phase_rule == "causal_step":
        phase = -1j * np.sign(k)
        # an odd spectrum has no real Nyquist component
        phase[grid.n // 2] = 0.0
    else:
        raise ActivationError("phase_rule must be 'real_even' or 'causal_step'")
    spectrum = phase * mag
    phi = inverse_1d(spectrum, grid.h, grid.z[0]).real
    return grid.z, phi


def passband(rho, grid: FrequencyGrid, phase_rule="real_even", floor=1e-12):
    """Mask of frequencies reproduced by :func:`design_activation`.

    The odd phase rule cannot carry the DC or Nyquist bins, so those are
    excluded for ``causal_step``.
    """
    k = grid.k
    # exponential penalties overflow to inf past the passband, which is handled below
    with np.errstate(over="ignore"):
        r = np.asarray(rho(k), dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        mag = np.where((r == 0) | ~np.isfinite(r), 0.0, 1.0 / np.sqrt(np.where(r == 0, 1.0, r)))
    mask = (mag >= floor * mag.max()) & (r > 0)
    if phase_rule == "causal_step":
        mask[0] = False
        mask[grid.n // 2] = False
    return mask


def roundtrip_penalty(z, phi):
    """``|DFT[phi]|**-2`` on the FFT frequencies of the sample grid."""
    h = z[1] - z[0]
    spec = forward_1d(phi, h, z[0])
    with np.errstate(divide="ignore"):
        return 2.0 * np.pi * np.fft.fftfreq(len(z), d=h), 1.0 / np.abs(spec) ** 2


def g_family_penalty(n, sigma):
    def rho(k):
        with np.errstate(over="ignore"):
            return np.exp(2.0 * (sigma * np.abs(k)) ** n / n ** (n - 1))

    return rho


def g_family_approx(n: int, sigma: float, grid: FrequencyGrid | None = None, tol=1e-12):
    """Numerically invert the order-``n`` exponential penalty family."""
    if int(n) != n or not 1 <= n <= 6:
        raise ActivationError("n must be an integer in 1..6")
    if sigma <= 0:
        raise ActivationError("sigma must be positive")
    grid = grid or FrequencyGrid()
    rho = g_family_penalty(int(n), float(sigma))
    k_nyq = np.pi / grid.h
    # transform must have decayed before Nyquist, or aliasing corrupts the samples
    if 1.0 / math.sqrt(min(rho(np.array([k_nyq]))[0], 1e300)) > tol:
        raise ActivationError("grid too coarse for this decay; reduce the spacing")
    # and phi must have decayed before the grid edge; n=1 has the slowest tails
    z, phi = design_activation(rho, "real_even", grid)
    edge = max(abs(phi[0]), abs(phi[-1]))
    if edge > 1e-3 * np.abs(phi).max():
        raise ActivationError("grid too small for the activation's decay; widen the grid")
    return z, phi


def save_two_column(path, z, phi):
    np.savetxt(path, np.column_stack([z, phi]), header="z phi", fmt="%.17g")


def load_two_column(path):
    data = np.loadtxt(path, ndmin=2)
    return data[:, 0], data[:, 1]


# ---- filter validation ----------------------------------------------------


@dataclass(frozen=True)
class FilterCheckGrid:
    half_width: float
    n: int
    order: int = 0
    step: float = 1.0
    k_max: float = np.inf


# Grids chosen so that jumps and kinks land on sample points and the
# truncation tails stay below the comparison tolerance.
_CHECK_GRIDS = {
    "Step": FilterCheckGrid(16.0, 2**16, 1, 1.0, 30.0),
    "ReLU": FilterCheckGrid(16.0, 2**16, 2, 1.0, 30.0),
    "PowerReLU": FilterCheckGrid(16.0, 2**16, 3, 1.0, 30.0),
    "LogisticBump": FilterCheckGrid(64.0, 2**12),
    "Sigmoid": FilterCheckGrid(64.0, 2**12, 1, 1.0),
    "SoftPlus": FilterCheckGrid(64.0, 2**12, 2, 1.0),
    "Cauchy": FilterCheckGrid(1024.0, 2**15),
    "Arctangent": FilterCheckGrid(1024.0, 2**15, 1, 1.0),
    "Gaussian": FilterCheckGrid(16.0, 2**10),
    "Erf": FilterCheckGrid(16.0, 2**10, 1, 1.0),
    "SatReLU": FilterCheckGrid(16.0, 2**16, 1, 1.0, 30.0),
    "Wavepacket": FilterCheckGrid(16.0, 2**11),
    "Rectangle": FilterCheckGrid(16.0, 2**16, 0, 1.0, 30.0),
    "Triangle": FilterCheckGrid(16.0, 2**14, 0, 1.0, 30.0),
    "Sinc": FilterCheckGrid(2.0**17, 2**21),
    "SquaredSinc": FilterCheckGrid(2048.0, 2**15),
    "HalfExponential": FilterCheckGrid(64.0, 2**18, 0, 1.0, 30.0),
    "HyperbolicSecant": FilterCheckGrid(64.0, 2**12),
    "OberhettingerIII10": FilterCheckGrid(1024.0, 2**16, 1, 1.0, 4.0),
}


def default_check_grid(spec: ActivationSpec) -> FilterCheckGrid:
    try:
        return _CHECK_GRIDS[spec.name]
    except KeyError:
        raise ActivationError(f"no validation grid registered for {spec.name}") from None


def sampled_transform(spec: ActivationSpec, grid: FilterCheckGrid):
    """Numerical and analytic transforms of the ``order``-th central difference of phi.

    Growing activations (Step, ReLU, ...) have only distributional
    transforms; differencing with step ``a`` multiplies the transform by
    ``(2i sin(ka/2))**order`` and yields an ordinary decaying function.
    Returns ``(k, numeric, analytic)`` on the FFT frequencies.
    """
    fg = FrequencyGrid(grid.half_width, grid.n)
    z = fg.z
    m = grid.order
    a = grid.step
    g = np.zeros_like(z)
    for j in range(m + 1):
        g += (-1) ** j * math.comb(m, j) * spec.eval(z + (m / 2.0 - j) * a)
    k = fg.k
    numeric = forward_1d(g, fg.h, z[0])
    keep = np.abs(k) <= grid.k_max
    analytic = np.full(k.shape, np.nan + 0j)
    with np.errstate(invalid="ignore"):
        analytic[keep] = (2j * np.sin(k[keep] * a / 2.0)) ** m * spec.transform(k[keep])
    return k, numeric, analytic


def filter_check(spec: ActivationSpec, grid: FilterCheckGrid | None = None, threshold=1e-6):
    """Relative l2 error between sampled and analytic transforms on the significant band.

    The band is where ``|F[phi](k)| >= threshold`` (and ``|k| <= k_max`` for
    transforms decaying too slowly to be resolved on any grid).
    """
    grid = grid or default_check_grid(spec)
    k, numeric, analytic = sampled_transform(spec, grid)
    base = np.zeros(k.shape)
    keep = np.abs(k) <= grid.k_max
    base[keep] = np.abs(spec.transform(k[keep]))
    band = (base >= threshold) & np.isfinite(base) & keep
    if grid.order:
        band &= k != 0
    err = np.linalg.norm(numeric[band] - analytic[band])
    return err / np.linalg.norm(analytic[band])
