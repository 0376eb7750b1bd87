"""Experiment orchestration: targets, MNIST ingestion, configuration and the four runs."""
import configparser
import contextlib
import dataclasses
import gzip
import json
import os
import struct
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special
from threadpoolctl import threadpool_limits

from .activations import parse_activation
from .diagnostics import RunLog, hull_mask, relative_error, save_similarity_csv, similarity
from .estimators import ShallowNetworkClassifier
from .kernel import InfeasibleError, build_features, solve_mse_ball, train_kernel_gd
from .network import Dataset, SplineParams, forward, init_spline, save_checkpoint, to_spline
from .spectral import GridFunction, fft_grid, save_grid
from .tables import CsvTable

TARGET_IDS = ("plane_waves", "bessel_ring", "hole_2d", "doppler_2d", "bumps_2d")
BUMP_S = 0.05
DOPPLER_EPS = 0.2
DOMAIN = (-2.0, 2.0)


# ---- targets ---------------------------------------------------------------


@dataclass
class TargetFunction:
    """A 2-D target; ``params`` holds everything drawn from the seed."""

    id: str
    params: dict
    fn: object = field(repr=False)

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != 2:
            raise ValueError("targets are functions of 2-D points")
        return self.fn(X)


def _plane_waves(rng):
    # F is a pair of Diracs at +-k_j per wave
    n = 6
    theta = rng.uniform(0.0, 2.0 * np.pi, n)
    freq = rng.uniform(2.0, 8.0, n)
    k = freq[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
    amp = rng.uniform(0.5, 1.5, n)
    phase = rng.uniform(0.0, 2.0 * np.pi, n)

    def fn(X):
        return np.cos(X @ k.T + phase) @ amp

    return {"k": k, "amplitude": amp, "phase": phase}, fn


def _bessel_ring(rng):
    # F is a uniform ring of radius 2 pi
    def fn(X):
        return special.j0(2.0 * np.pi * np.linalg.norm(X, axis=1))

    return {"radius": 2.0 * np.pi}, fn


def _hole(rng):
    # F ~ 1/|k|^2 away from the origin
    def fn(X):
        return (np.linalg.norm(X, axis=1) >= 0.75).astype(float)

    return {"radius": 0.75}, fn


def _chirp(t, eps):
    u = np.clip((t - DOMAIN[0]) / (DOMAIN[1] - DOMAIN[0]), 0.0, 1.0)
    return np.sin(np.pi * u) * np.sin(2.0 * np.pi * (1.0 + eps) / (u + eps))


def _doppler(rng):
    # product of two axis-aligned chirps; frequency rises toward the low corner
    def fn(X):
        return _chirp(X[:, 0], DOPPLER_EPS) * _chirp(X[:, 1], DOPPLER_EPS)

    return {"eps": DOPPLER_EPS}, fn


def _bumps(rng):
    n = 8
    centers = rng.uniform(-1.5, 1.5, (n, 2))
    widths = rng.uniform(0.5, 2.0, n)
    heights = rng.uniform(0.5, 1.5, n) * rng.choice([-1.0, 1.0], n)
    s = BUMP_S

    def fn(X):
        a = np.abs(X[:, None, :] - centers[None]) / widths[None, :, None]
        # scaled so each bump peaks at its height
        prof = s**8 / ((a[..., 0] + s) ** 4 * (a[..., 1] + s) ** 4)
        return prof @ heights

    return {"centers": centers, "widths": widths, "heights": heights, "s": s}, fn


_TARGETS = {
    "plane_waves": _plane_waves,
    "bessel_ring": _bessel_ring,
    "hole_2d": _hole,
    "doppler_2d": _doppler,
    "bumps_2d": _bumps,
}


def make_target(id, seed=0) -> TargetFunction:
    if id not in _TARGETS:
        raise ValueError(f"unknown target {id!r}; choose from {TARGET_IDS}")
    params, fn = _TARGETS[id](np.random.default_rng(seed))
    return TargetFunction(id, params, fn)


# ---- IDX ingestion ---------------------------------------------------------

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


def _read_bytes(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx(path, magic):
    """Parse one big-endian IDX file of unsigned bytes into an array."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise ValueError(f"{path}: truncated IDX header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise ValueError(f"{path}: bad IDX magic {found:#010x}, expected {magic:#010x}")
    ndim = magic & 0xFF
    if len(raw) < 4 + 4 * ndim:
        raise ValueError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    count = int(np.prod(dims))
    body = raw[4 + 4 * ndim:]
    if len(body) < count:
        raise ValueError(f"{path}: truncated IDX payload ({len(body)} of {count} bytes)")
    return np.frombuffer(body, dtype=np.uint8, count=count).reshape(dims)


def load_idx(images_path, labels_path, n=None, seed=0) -> Dataset:
    """MNIST-style IDX pair as a Dataset with pixels in [0, 1] and one-hot targets.

    With ``n`` set, a deterministic random subset of ``n`` rows is drawn with
    ``seed``. The integer labels are kept in ``meta["labels"]``.
    """
    images = read_idx(images_path, IDX_IMAGES)
    labels = read_idx(labels_path, IDX_LABELS)
    if images.shape[0] != labels.shape[0]:
        raise ValueError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if labels.size and labels.max() > 9:
        raise ValueError("labels must lie in 0..9")
    N, rows, cols = images.shape
    idx = np.arange(N)
    if n is not None:
        if n > N:
            raise ValueError(f"asked for {n} rows from a file with {N}")
        idx = np.sort(np.random.default_rng(seed).permutation(N)[:n])
    X = images[idx].reshape(len(idx), rows * cols) / 255.0
    lab = labels[idx].astype(int)
    return Dataset(X, np.eye(10)[lab], {"labels": lab, "rows": rows, "cols": cols, "index": idx})


def mnist_split(data: Dataset, n_train, n_test, seed=0):
    """Disjoint train/test subsets drawn by one seeded permutation."""
    if n_train + n_test > len(data.X):
        raise ValueError("not enough rows for the requested split")
    perm = np.random.default_rng(seed).permutation(len(data.X))
    labels = data.meta.get("labels", data.y.argmax(axis=1))
    parts = []
    for idx in (perm[:n_train], perm[n_train:n_train + n_test]):
        parts.append(Dataset(data.X[idx], data.y[idx], {"labels": labels[idx]}))
    return tuple(parts)


# ---- configuration ---------------------------------------------------------

_PRESETS = {
    "exp1": dict(activations=("relu", "sigmoid", "erf", "cauchy"), hidden=4000, n_train=20,
                 optimizers=("gd", "adam"), max_iters=250_000, grid=129, replicates=5),
    "exp2": dict(activations=("relu",), hidden=4000, n_train=400, eps=5e-6, grid=256, targets=TARGET_IDS),
    "exp3": dict(activations=("relu",), hidden=200, n_train=6400, n_test=1000, dataset="mnist"),
    "exp4": dict(activations=("relu",), hidden=200, n_train=6400, n_test=1000, dataset="mnist", switch_epoch=2),
}


def _tuple(v):
    if isinstance(v, str):
        return tuple(s.strip() for s in v.split(",") if s.strip())
    return tuple(v)


@dataclass
class ExperimentConfig:
    experiment: str
    activations: tuple = ("relu",)
    hidden: int = 4000
    n_train: int = 20
    n_test: int = 0
    dataset: str = "uniform"
    optimizers: tuple = ("gd",)
    lr: float = None
    adam_lr: float = 1e-3
    max_iters: int = 250_000
    mse_threshold: float = 1e-6
    eps: float = 5e-6
    targets: tuple = TARGET_IDS
    grid: int = 129
    epochs: int = 10
    batch_size: int = 256
    sgd_lr: float = 0.5
    loss: str = "softmax-ce"
    switch_epoch: int = None
    kernel_iters: int = 200
    seed: int = 0
    replicates: int = 1
    output_dir: str = "runs"
    mnist_images: str = None
    mnist_labels: str = None
    threads: int = None

    def __post_init__(self):
        if self.experiment not in _PRESETS:
            raise ValueError(f"experiment must be one of {sorted(_PRESETS)}")
        self.activations = _tuple(self.activations)
        self.optimizers = _tuple(self.optimizers)
        self.targets = _tuple(self.targets)
        for t in self.targets:
            if t not in TARGET_IDS:
                raise ValueError(f"unknown target {t!r}")

    @classmethod
    def preset(cls, experiment, **overrides):
        kw = dict(_PRESETS[experiment])
        kw.update(overrides)
        return cls(experiment, **kw)

    @classmethod
    def from_file(cls, path):
        """Read an INI file with an ``[experiment]`` section; missing keys take the preset."""
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(path)
        sec = cp["experiment"]
        exp = sec.get("id") or sec.get("experiment")
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        kw = {}
        for key, raw in sec.items():
            if key in ("id", "experiment"):
                continue
            if key not in defaults:
                raise ValueError(f"unknown config key {key!r}")
            kw[key] = _coerce(raw, defaults[key])
        return cls.preset(exp, **kw)

    def to_file(self, path):
        cp = configparser.ConfigParser()
        d = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            d["id" if f.name == "experiment" else f.name] = ", ".join(v) if isinstance(v, tuple) else str(v)
        cp["experiment"] = d
        with open(path, "w") as fh:
            cp.write(fh)

    def with_env(self):
        """Apply ``RADONSPLINE_OUTPUT_DIR`` and ``RADONSPLINE_THREADS`` overrides."""
        cfg = dataclasses.replace(self)
        if os.environ.get("RADONSPLINE_OUTPUT_DIR"):
            cfg.output_dir = os.environ["RADONSPLINE_OUTPUT_DIR"]
        if os.environ.get("RADONSPLINE_THREADS"):
            cfg.threads = int(os.environ["RADONSPLINE_THREADS"])
        return cfg


def _coerce(raw, default):
    raw = raw.strip()
    if raw.lower() in ("", "none"):
        return None
    if isinstance(default, tuple):
        return _tuple(raw)
    if isinstance(default, int):
        return int(float(raw))
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, str):
        return raw
    # fields defaulting to None: guess from the text
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


# ---- runs ------------------------------------------------------------------


@dataclass
class ArtifactBundle:
    output_dir: Path
    metrics: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def add(self, path):
        self.files.append(Path(path))
        return path


def _grid_axes(n, lo=DOMAIN[0], hi=DOMAIN[1]):
    g = np.linspace(lo, hi, n)
    return g, np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)


def _exp1(cfg, out, bundle):
    metrics = CsvTable(bundle.add(out / "metrics.csv"), "exp1_metrics")
    timings = CsvTable(bundle.add(out / "timings.csv"), "exp1_timings")
    _, G = _grid_axes(cfg.grid)
    results = {}
    for rep in range(cfg.replicates):
        rng = np.random.default_rng([cfg.seed, rep])
        X = rng.uniform(*DOMAIN, (cfg.n_train, 2))
        y = rng.uniform(*DOMAIN, cfg.n_train)
        s0 = init_spline(X, cfg.hidden, rng)
        mask = hull_mask(X, G)
        for name in cfg.activations:
            act = parse_activation(name)
            phi = build_features(s0, act, X)
            Pg = phi.rebuild(G).phi
            for opt in cfg.optimizers:
                lr = cfg.adam_lr if opt == "adam" else cfg.lr
                t0 = time.perf_counter()
                gd = train_kernel_gd(phi, y, optimizer=opt, lr=lr, mse_threshold=cfg.mse_threshold,
                                     max_iters=cfg.max_iters)
                t1 = time.perf_counter()
                # the convex program at the mse GD actually reached
                cvx = solve_mse_ball(phi, y, eps=gd.residual_mse)
                t2 = time.perf_counter()
                err = relative_error(Pg @ gd.mu_hat, Pg @ cvx.mu_hat, mask)
                its = gd.diagnostics["iterations"]
                metrics.append([act.label, rep, opt, its, gd.residual_mse, err])
                timings.append([act.label, rep, opt, t1 - t0, t2 - t1])
                results.setdefault((act.label, opt), []).append(err)
                if rep == 0:
                    fit = SplineParams(s0.xi, s0.gamma, gd.mu_hat, s0.omega)
                    save_checkpoint(bundle.add(out / f"{act.name}_{opt}.rspl"), fit,
                                    {"activation": act.label, "optimizer": opt, "iterations": its})
    bundle.metrics["relative_error"] = {f"{a}/{o}": float(np.mean(v)) for (a, o), v in results.items()}
    bundle.metrics["relative_error_std"] = {f"{a}/{o}": float(np.std(v)) for (a, o), v in results.items()}


def _taper(a, inner, outer):
    t = np.clip((np.abs(a) - inner) / (outer - inner), 0.0, 1.0)
    return np.where(np.abs(a) <= outer, 0.5 * (1.0 + np.cos(np.pi * t)), 0.0)


def spectral_window(fn, n=256, inner=2.0, margin=0.25, pad=2):
    """Sample ``fn`` on a zero-padded grid under a cosine taper.

    The taper is 1 on ``[-inner, inner]^2`` and falls to 0 across a margin of
    ``margin * inner``; the grid spans ``pad`` times the tapered box so the
    transform is finely sampled in frequency.
    """
    outer = inner * (1.0 + margin)
    L = pad * outer
    axis = -L + 2.0 * L * np.arange(n) / n
    w = _taper(axis, inner, outer)
    g = GridFunction.sample(fn, [(-L, L)] * 2, (n, n))
    return GridFunction(g.axes, g.values * w[:, None] * w[None, :])


def _exp2(cfg, out, bundle):
    metrics = CsvTable(bundle.add(out / "metrics.csv"), "exp2_metrics")
    rng = np.random.default_rng(cfg.seed)
    X = rng.uniform(*DOMAIN, (cfg.n_train, 2))
    s0 = init_spline(X, cfg.hidden, rng)
    # held-out grid over the data hull
    _, G = _grid_axes(64)
    G = G[hull_mask(X, G)]
    peaks = {}
    for tid in cfg.targets:
        target = make_target(tid, cfg.seed)
        y = target(X)
        tg = spectral_window(target, cfg.grid)
        prof_t = fft_grid(tg)
        for name in cfg.activations:
            act = parse_activation(name)
            phi = build_features(s0, act, X)
            try:
                sol = solve_mse_ball(phi, y, eps=cfg.eps)
            except InfeasibleError as e:
                metrics.append([tid, act.label, False, e.floor, float("nan")])
                continue
            fit = SplineParams(s0.xi, s0.gamma, sol.mu_hat, s0.omega)
            test = float(np.mean((forward(fit, act, G) - target(G)) ** 2))
            metrics.append([tid, act.label, True, sol.residual_mse, test])
            fg = spectral_window(lambda P: forward(fit, act, P), cfg.grid)
            prof = fft_grid(fg)
            mr = CsvTable(bundle.add(out / f"mr_{tid}_{act.name}.csv"), "total_magnitude")
            for r, m, mt in zip(prof.radii, prof.M, prof_t.M):
                mr.append([r, m, mt])
            save_grid(bundle.add(out / f"fit_{tid}_{act.name}.grid"), fg)
            i = int(np.argmax(prof.M))
            peaks[f"{tid}/{act.label}"] = {"bin": i, "radius": float(prof.radii[i]), "bin_width": prof.bin_width}
        save_grid(bundle.add(out / f"target_{tid}.grid"), tg)
    bundle.metrics["peaks"] = peaks


def _load_mnist(cfg):
    if not (cfg.mnist_images and cfg.mnist_labels):
        raise ValueError("exp3/exp4 need mnist_images and mnist_labels")
    data = load_idx(cfg.mnist_images, cfg.mnist_labels)
    return mnist_split(data, cfg.n_train, cfg.n_test, cfg.seed)


def _adaptive(cfg, out, bundle, switch):
    train, test = _load_mnist(cfg)
    log = RunLog(bundle.add(out / "metrics.jsonl"))
    hist = CsvTable(bundle.add(out / "history.csv"), "adaptive_history")
    for name in cfg.activations:
        clf = ShallowNetworkClassifier(name, cfg.hidden, cfg.epochs, cfg.batch_size, cfg.sgd_lr, cfg.loss,
                                       kernel_after=switch, kernel_iters=cfg.kernel_iters,
                                       random_state=cfg.seed)
        clf.fit(train.X, train.meta["labels"], eval_set=(test.X, test.meta["labels"]))
        act = clf.activation_
        for row in clf.history_:
            hist.append(row)
            for key in ("train_loss", "test_accuracy", "auc", "step_distance"):
                log.log(row["epoch"], f"{act.name}/{key}", row[key])
        steps = CsvTable(bundle.add(out / f"steps_{act.name}.csv"), "step_distances")
        for i, d in enumerate(clf.step_distances_, start=1):
            steps.append([i, d])
        if switch is not None:
            kl = CsvTable(bundle.add(out / f"kernel_losses_{act.name}.csv"), "kernel_losses")
            for i, v in enumerate(clf.kernel_losses_):
                kl.append([i, v])
        s = to_spline(clf.params_)
        save_checkpoint(bundle.add(out / f"final_{act.name}.rspl"), s, {"activation": act.label})
        save_similarity_csv(bundle.add(out / f"similarity_{act.name}.csv"), similarity(s))
        bundle.metrics[act.label] = {
            "history": clf.history_,
            "step_distances": list(clf.step_distances_),
            "kernel_losses": list(clf.kernel_losses_),
            "switch_step": clf.switch_step_,
        }


def run_experiment(cfg: ExperimentConfig) -> ArtifactBundle:
    """Run one experiment and write its artifacts under ``cfg.output_dir``.

    Tables are appended row by row, so an exception leaves every finished
    row on disk before it propagates.
    """
    cfg = cfg.with_env()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    bundle = ArtifactBundle(out)
    cfg.to_file(bundle.add(out / "config.ini"))
    limits = threadpool_limits(cfg.threads) if cfg.threads else contextlib.nullcontext()
    with limits:
        if cfg.experiment == "exp1":
            _exp1(cfg, out, bundle)
        elif cfg.experiment == "exp2":
            _exp2(cfg, out, bundle)
        else:
            _adaptive(cfg, out, bundle, cfg.switch_epoch if cfg.experiment == "exp4" else None)
    with open(bundle.add(out / "summary.json"), "w") as fh:
        json.dump(_jsonable(bundle.metrics), fh, indent=2, sort_keys=True)
    return bundle


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v
