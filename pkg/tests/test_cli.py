import hashlib
import json

import numpy as np
import pytest

from radonspline import cli, tables
from radonspline.activations import catalog_lookup, load_two_column
from radonspline.network import forward, load_checkpoint


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_fit_kernel_equality(tmp_path, capsys):
    assert cli.main(["fit-kernel", "--hidden", "200", "--n-train", "8", "--grid", "9", "--output-dir", str(tmp_path)]) == 0
    info = _json_out(capsys)
    assert info["method"] == "equality" and info["residual_mse"] < 1e-16
    s, meta = load_checkpoint(tmp_path / "fit.rspl")
    assert meta["solver"] == "equality" and s.n_neurons == 200
    schema, rows = tables.read_csv(tmp_path / "fit_grid.csv")
    assert schema == "fit_grid" and len(rows) == 81
    # the grid table is the checkpoint evaluated at the grid points
    P = np.array([[r["x1"], r["x2"]] for r in rows])
    f = np.array([r["f"] for r in rows])
    np.testing.assert_allclose(forward(s, catalog_lookup("ReLU"), P), f, rtol=1e-12, atol=1e-12)


def test_fit_kernel_from_file(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (6, 2))
    np.savetxt(tmp_path / "d.csv", np.column_stack([X, X[:, 0]]), delimiter=",")
    cli.main(["fit-kernel", "--data", str(tmp_path / "d.csv"), "--solver", "mse-ball", "--eps", "1e-4",
              "--hidden", "100", "--output-dir", str(tmp_path)])
    assert _json_out(capsys)["residual_mse"] == pytest.approx(1e-4, rel=1e-6)


def test_simulate_two_point(tmp_path, capsys):
    cli.main(["simulate-adaptive", "--steps", "200", "--snapshot-every", "100", "--output-dir", str(tmp_path)])
    info = _json_out(capsys)
    assert info["snapshots"] == 3
    assert sorted(p.name for p in tmp_path.glob("snapshot_*.rspl")) == [
        "snapshot_00000000.rspl", "snapshot_00000100.rspl", "snapshot_00000200.rspl"]
    assert tables.read_csv(tmp_path / "events.csv")[0] == "events"


def test_analyze_spectrum_from_checkpoint(tmp_path, capsys):
    cli.main(["fit-kernel", "--hidden", "50", "--n-train", "5", "--output-dir", str(tmp_path)])
    capsys.readouterr()
    cli.main(["analyze-spectrum", "--checkpoint", str(tmp_path / "fit.rspl"), "--size", "64", "--sinogram",
              "--angles", "16", "--objectives", "--output-dir", str(tmp_path)])
    rep = _json_out(capsys)
    assert "O1" in rep and "O2" in rep and "O3" not in rep
    assert tables.read_csv(tmp_path / "spectrum.csv")[0] == "spectrum"
    _, rows = tables.read_csv(tmp_path / "sinogram.csv")
    assert len({r["angle"] for r in rows}) == 16


def test_design_activation(tmp_path, capsys):
    cli.main(["design-activation", "--rho", "exp2k", "--n", "4096", "--half-width", "64", "--output-dir", str(tmp_path)])
    info = _json_out(capsys)
    z, phi = load_two_column(info["file"])
    assert len(z) == 4096 and np.abs(phi).max() == pytest.approx(info["peak"])


def test_parse_rho():
    k = np.array([0.0, 1.0, -2.0])
    np.testing.assert_allclose(cli.parse_rho("k2")(k), [0, 1, 4])
    np.testing.assert_allclose(cli.parse_rho("power:p=3")(k), [0, 1, 8])
    np.testing.assert_allclose(cli.parse_rho("exp:a=2,q=1")(k), np.exp(2 * np.abs(k)))
    with pytest.raises(ValueError):
        cli.parse_rho("cosh")


def test_reproduce_with_config(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("RADONSPLINE_OUTPUT_DIR", raising=False)
    ini = tmp_path / "c.ini"
    ini.write_text("[experiment]\nid = exp1\nhidden = 30\nn_train = 4\ngrid = 9\nmax_iters = 500\n"
                   "activations = relu\noptimizers = gd\nreplicates = 1\n")
    out = tmp_path / "run"
    assert cli.main(["reproduce", "exp1", "--config", str(ini), "--output-dir", str(out)]) == 0
    assert _json_out(capsys)["output_dir"] == str(out)
    assert (out / "summary.json").exists()
    with pytest.raises(SystemExit):
        cli.main(["reproduce", "exp2", "--config", str(ini)])


def test_inspect(tmp_path, capsys):
    tables.write_csv(tmp_path / "s.csv", "spectrum", [[0.0, 1.0]])
    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    assert cli.main(["inspect", str(tmp_path / "s.csv")]) == 0
    assert _json_out(capsys)["schema"] == "spectrum"
    assert cli.main(["inspect", str(tmp_path / "s.csv"), str(tmp_path / "bad.csv")]) == 1
    lines = capsys.readouterr().out.splitlines()
    assert "error" in json.loads(lines[1])


def test_download_checks_digest(tmp_path, capsys):
    src = tmp_path / "src.bin"
    src.write_bytes(b"idx payload")
    digest = hashlib.sha256(b"idx payload").hexdigest()
    out = tmp_path / "got.bin"
    assert cli.main(["download-mnist", "--url", src.as_uri(), "--sha256", digest, "--out", str(out)]) == 0
    assert out.read_bytes() == b"idx payload"
    out.unlink()
    assert cli.main(["download-mnist", "--url", src.as_uri(), "--sha256", "0" * 64, "--out", str(out)]) == 1
    assert not out.exists()


def test_requires_command():
    with pytest.raises(SystemExit):
        cli.main([])
