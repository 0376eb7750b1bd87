import gzip
import json
import struct

import mpmath
import numpy as np
import pytest
from scipy.ndimage import maximum_filter

from radonspline import harness
from radonspline.harness import ExperimentConfig, IDX_IMAGES, IDX_LABELS
from radonspline.network import load_checkpoint
from radonspline.spectral import fft_grid, load_grid
from radonspline.tables import read_csv

from conftest import MNIST_IMAGES, MNIST_LABELS


def _write_idx(path, magic, arr, compress=False):
    arr = np.asarray(arr, dtype=np.uint8)
    raw = struct.pack(">I", magic) + struct.pack(f">{arr.ndim}I", *arr.shape) + arr.tobytes()
    if compress:
        raw = gzip.compress(raw)
    path.write_bytes(raw)
    return path


@pytest.fixture
def idx_pair(tmp_path):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, (12, 3, 4))
    labels = np.arange(12) % 10
    return (_write_idx(tmp_path / "img.gz", IDX_IMAGES, images, compress=True),
            _write_idx(tmp_path / "lab", IDX_LABELS, labels), images, labels)


# IDX ingestion


def test_read_idx_gzip_and_plain(idx_pair):
    ip, lp, images, labels = idx_pair
    np.testing.assert_array_equal(harness.read_idx(ip, IDX_IMAGES), images)
    np.testing.assert_array_equal(harness.read_idx(lp, IDX_LABELS), labels)


def test_read_idx_bad_magic(idx_pair):
    with pytest.raises(ValueError, match="magic"):
        harness.read_idx(idx_pair[1], IDX_IMAGES)


def test_read_idx_truncated(tmp_path, idx_pair):
    raw = gzip.decompress(idx_pair[0].read_bytes())
    p = tmp_path / "cut"
    p.write_bytes(raw[:-5])
    with pytest.raises(ValueError, match="truncated"):
        harness.read_idx(p, IDX_IMAGES)
    p.write_bytes(raw[:6])
    with pytest.raises(ValueError, match="truncated"):
        harness.read_idx(p, IDX_IMAGES)


def test_load_idx_scaling_and_one_hot(idx_pair):
    ip, lp, images, labels = idx_pair
    d = harness.load_idx(ip, lp)
    np.testing.assert_allclose(d.X, images.reshape(12, 12) / 255.0)
    np.testing.assert_array_equal(d.y.argmax(axis=1), labels)
    assert d.meta["rows"] == 3 and d.meta["cols"] == 4


def test_load_idx_rejects_bad_labels(tmp_path, idx_pair):
    lp = _write_idx(tmp_path / "bad", IDX_LABELS, np.full(12, 11))
    with pytest.raises(ValueError, match="0..9"):
        harness.load_idx(idx_pair[0], lp)
    lp = _write_idx(tmp_path / "short", IDX_LABELS, np.zeros(5))
    with pytest.raises(ValueError):
        harness.load_idx(idx_pair[0], lp)


def test_load_idx_subset_deterministic(idx_pair):
    a = harness.load_idx(idx_pair[0], idx_pair[1], n=5, seed=3)
    b = harness.load_idx(idx_pair[0], idx_pair[1], n=5, seed=3)
    np.testing.assert_array_equal(a.meta["index"], b.meta["index"])
    assert len(set(a.meta["index"])) == 5
    with pytest.raises(ValueError):
        harness.load_idx(idx_pair[0], idx_pair[1], n=13)


def test_mnist_split_disjoint(idx_pair):
    d = harness.load_idx(idx_pair[0], idx_pair[1])
    tr, te = harness.mnist_split(d, 7, 5, seed=1)
    rows = {tuple(x) for x in tr.X} | {tuple(x) for x in te.X}
    assert len(tr.X) == 7 and len(te.X) == 5 and len(rows) == 12
    with pytest.raises(ValueError):
        harness.mnist_split(d, 10, 5)


def test_bundled_mnist_header():
    imgs = harness.read_idx(MNIST_IMAGES, IDX_IMAGES)
    labs = harness.read_idx(MNIST_LABELS, IDX_LABELS)
    assert imgs.shape == (10_000, 28, 28) and labs.shape == (10_000,)
    assert labs.max() == 9


# targets


def test_unknown_target():
    with pytest.raises(ValueError):
        harness.make_target("swirl")


@pytest.mark.parametrize("tid", harness.TARGET_IDS)
def test_targets_deterministic(tid):
    X = np.random.default_rng(0).uniform(-2, 2, (50, 2))
    np.testing.assert_array_equal(harness.make_target(tid, 4)(X), harness.make_target(tid, 4)(X))
    assert np.all(np.isfinite(harness.make_target(tid, 4)(X)))


def test_target_needs_2d():
    with pytest.raises(ValueError):
        harness.make_target("hole_2d")(np.zeros((3, 3)))


def test_bessel_ring_matches_mpmath():
    t = harness.make_target("bessel_ring")
    X = np.random.default_rng(1).uniform(-2, 2, (25, 2))
    ref = [float(mpmath.besselj(0, 2 * mpmath.pi * mpmath.sqrt(x**2 + y**2))) for x, y in X]
    np.testing.assert_allclose(t(X), ref, atol=1e-10)


def test_hole_values():
    t = harness.make_target("hole_2d")
    np.testing.assert_array_equal(t([[0.0, 0.0], [1.0, 0.0], [0.0, -0.5]]), [0.0, 1.0, 0.0])


def test_bumps_peak_at_heights():
    t = harness.make_target("bumps_2d", 2)
    p = t.params
    # far-apart widths make cross-talk small but nonzero, so compare to the sum at each centre
    for c, h in zip(p["centers"], p["heights"]):
        a = np.abs(c[None] - p["centers"]) / p["widths"][:, None]
        want = (p["s"] ** 8 / ((a[:, 0] + p["s"]) ** 4 * (a[:, 1] + p["s"]) ** 4)) @ p["heights"]
        assert t(c[None])[0] == pytest.approx(want, rel=1e-12)
        assert abs(want - h) < 0.1 * abs(h) + 0.05


def test_plane_wave_spectrum_has_six_pairs():
    t = harness.make_target("plane_waves", 0)
    prof = fft_grid(harness.spectral_window(t, 256))
    kx, ky = prof.k_axes
    A = np.abs(prof.F)
    top = A.max()
    dk = prof.bin_width
    for k in t.params["k"]:
        for sgn in (1.0, -1.0):
            near = (np.abs(kx[:, None] - sgn * k[0]) <= 1.5 * dk) & (np.abs(ky[None, :] - sgn * k[1]) <= 1.5 * dk)
            assert A[near].max() > 0.2 * top
    # and nothing else: exactly twelve local maxima stand out
    peaks = (A == maximum_filter(A, size=5, mode="wrap")) & (A > 0.2 * top)
    assert peaks.sum() == 12


def test_bessel_ring_spectrum_peaks_at_two_pi():
    prof = fft_grid(harness.spectral_window(harness.make_target("bessel_ring"), 256))
    i = int(np.argmax(prof.M))
    assert abs(prof.radii[i] - 2 * np.pi) <= prof.bin_width


def test_spectral_window_taper():
    g = harness.spectral_window(lambda P: np.ones(len(P)), 64)
    v = g.values
    assert v.max() == 1.0 and v.min() == 0.0
    # zero beyond 1.25 * inner
    ax = g.axes[0]
    assert np.all(v[np.abs(ax) > 2.5, :] == 0.0)


# configuration


def test_config_presets():
    cfg = ExperimentConfig.preset("exp3")
    assert cfg.hidden == 200 and cfg.n_train == 6400 and cfg.dataset == "mnist"
    with pytest.raises(ValueError):
        ExperimentConfig("exp9")
    with pytest.raises(ValueError):
        ExperimentConfig("exp2", targets="swirl")


def test_config_roundtrip(tmp_path):
    cfg = ExperimentConfig.preset("exp4", hidden=17, lr=0.25, activations=("relu", "sigmoid"))
    p = tmp_path / "c.ini"
    cfg.to_file(p)
    assert ExperimentConfig.from_file(p) == cfg


def test_config_file_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        ExperimentConfig.from_file(tmp_path / "nope.ini")
    p = tmp_path / "bad.ini"
    p.write_text("[experiment]\nid = exp1\nwidth = 3\n")
    with pytest.raises(ValueError):
        ExperimentConfig.from_file(p)


def test_config_partial_file_takes_preset(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[experiment]\nid = exp1\nhidden = 12\nactivations = relu, erf\n")
    cfg = ExperimentConfig.from_file(p)
    assert cfg.hidden == 12 and cfg.activations == ("relu", "erf") and cfg.max_iters == 250_000


def test_config_env_override(monkeypatch):
    monkeypatch.setenv("RADONSPLINE_OUTPUT_DIR", "/tmp/elsewhere")
    monkeypatch.setenv("RADONSPLINE_THREADS", "2")
    cfg = ExperimentConfig.preset("exp1").with_env()
    assert cfg.output_dir == "/tmp/elsewhere" and cfg.threads == 2


# small runs


def _tiny_exp1(out):
    return ExperimentConfig.preset("exp1", hidden=40, n_train=5, grid=17, replicates=1, max_iters=3000,
                                   activations=("relu",), optimizers=("gd",), output_dir=str(out))


def test_exp1_tiny_deterministic(tmp_path, monkeypatch):
    monkeypatch.delenv("RADONSPLINE_OUTPUT_DIR", raising=False)
    a = harness.run_experiment(_tiny_exp1(tmp_path / "a"))
    b = harness.run_experiment(_tiny_exp1(tmp_path / "b"))
    assert a.metrics == b.metrics
    schema, rows = read_csv(tmp_path / "a" / "metrics.csv")
    assert schema == "exp1_metrics" and len(rows) == 1
    assert rows[0]["relative_error"] == pytest.approx(a.metrics["relative_error"]["relu/gd"])
    s, meta = load_checkpoint(tmp_path / "a" / "ReLU_gd.rspl")
    assert s.n_neurons == 40 and meta["optimizer"] == "gd"
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["relative_error"] == a.metrics["relative_error"]
    assert ExperimentConfig.from_file(tmp_path / "a" / "config.ini").hidden == 40


def test_exp2_tiny(tmp_path, monkeypatch):
    monkeypatch.delenv("RADONSPLINE_OUTPUT_DIR", raising=False)
    cfg = ExperimentConfig.preset("exp2", hidden=200, n_train=30, grid=64, eps=1e-3, targets=("bessel_ring",),
                                  output_dir=str(tmp_path))
    b = harness.run_experiment(cfg)
    schema, rows = read_csv(tmp_path / "metrics.csv")
    assert schema == "exp2_metrics" and rows[0]["feasible"] == 1
    assert rows[0]["train_mse"] == pytest.approx(1e-3, rel=1e-6)
    assert "bessel_ring/relu" in b.metrics["peaks"]
    assert load_grid(tmp_path / "target_bessel_ring.grid").shape == (64, 64)


def test_exp3_needs_mnist(tmp_path):
    with pytest.raises(ValueError, match="mnist"):
        harness.run_experiment(ExperimentConfig.preset("exp3", output_dir=str(tmp_path)))


def test_exp4_tiny(tmp_path, monkeypatch):
    monkeypatch.delenv("RADONSPLINE_OUTPUT_DIR", raising=False)
    cfg = ExperimentConfig.preset("exp4", hidden=16, n_train=300, n_test=100, epochs=2, switch_epoch=1,
                                  kernel_iters=5, mnist_images=str(MNIST_IMAGES), mnist_labels=str(MNIST_LABELS),
                                  output_dir=str(tmp_path))
    b = harness.run_experiment(cfg)
    m = b.metrics["relu"]
    assert m["switch_step"] is not None and len(m["kernel_losses"]) >= 2
    assert m["kernel_losses"][-1] <= m["kernel_losses"][0]
    schema, rows = read_csv(tmp_path / "history.csv")
    assert schema == "adaptive_history" and {r["phase"] for r in rows} >= {"kernel"}
