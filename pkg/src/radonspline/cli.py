"""Command-line entry point."""
import argparse
import hashlib
import json
import os
import sys
import urllib.request
from pathlib import Path

import numpy as np

from . import harness, tables
from .activations import FrequencyGrid, design_activation, g_family_penalty, parse_activation, save_two_column
from .adaptive import simulate
from .kernel import build_features, solve_min_norm, solve_mse_ball, train_kernel_gd
from .network import Dataset, SplineParams, init_spline, load_checkpoint, save_checkpoint
from .spectral import GridFunction, fft_grid, load_grid, objective_O, radon_2d


def _out_dir(args):
    d = Path(args.output_dir or os.environ.get("RADONSPLINE_OUTPUT_DIR") or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_xy(path, n, seed):
    """Rows of ``x_1 .. x_D, y`` from a text file, or ``n`` uniform points on [-2, 2]^2."""
    if path:
        data = np.loadtxt(path, delimiter="," if str(path).endswith(".csv") else None, ndmin=2)
        return data[:, :-1], data[:, -1]
    rng = np.random.default_rng(seed)
    return rng.uniform(-2.0, 2.0, (n, 2)), rng.uniform(-2.0, 2.0, n)


def cmd_fit_kernel(args):
    act = parse_activation(args.activation)
    X, y = _load_xy(args.data, args.n_train, args.seed)
    s0 = init_spline(X, args.hidden, np.random.default_rng([args.seed, 1]))
    phi = build_features(s0, act, X)
    if args.solver == "equality":
        sol = solve_min_norm(phi, y, allow_lsq=args.allow_lsq)
    elif args.solver == "mse-ball":
        sol = solve_mse_ball(phi, y, eps=args.eps)
    else:
        sol = train_kernel_gd(phi, y, optimizer=args.solver, lr=args.lr, mse_threshold=args.eps,
                              max_iters=args.max_iters)
    out = _out_dir(args)
    info = sol.to_dict()
    info.update(activation=act.label, provenance=phi.provenance)
    fit = SplineParams(s0.xi, s0.gamma, sol.mu_hat, s0.omega)
    save_checkpoint(out / "fit.rspl", fit, {"activation": act.label, "solver": args.solver})
    if X.shape[1] == 2:
        lo, hi = X.min(axis=0), X.max(axis=0)
        g = [np.linspace(lo[d], hi[d], args.grid) for d in range(2)]
        P = np.stack(np.meshgrid(*g, indexing="ij"), -1).reshape(-1, 2)
        f = build_features(fit, act, P).phi @ sol.mu_hat
        tables.write_csv(out / "fit_grid.csv", "fit_grid", np.column_stack([P, f]))
    text = json.dumps(info, indent=2, sort_keys=True, default=float)
    (out / "solution.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_simulate(args):
    act = parse_activation(args.activation)
    if args.dataset == "two-point":
        data = Dataset(np.array([[-2.0, 0.3], [2.0, -0.3]]), np.array([-1.0, -1.0]))
        t = np.pi / 2 + 0.3
        s0 = SplineParams(np.array([[np.cos(t), np.sin(t)]]), np.array([-1.0]), np.array([1.0]))
        freeze = True
    else:
        X, y = _load_xy(args.dataset, 0, args.seed)
        data = Dataset(X, y)
        s0 = init_spline(X, args.hidden, np.random.default_rng(args.seed))
        s0.mu = np.random.default_rng([args.seed, 1]).standard_normal(args.hidden) / np.sqrt(args.hidden)
        freeze = args.freeze_mu
    traj = simulate(s0, act, data, parameterization=args.param, steps=args.steps, step_size=args.step_size,
                    method=args.method, freeze_mu=freeze, record_every=args.snapshot_every)
    out = _out_dir(args)
    for step, s in zip(traj.steps, traj.snapshots):
        save_checkpoint(out / f"snapshot_{step:08d}.rspl", s, {"step": step, "activation": act.label})
    ev = tables.CsvTable(out / "events.csv", "events")
    for e in traj.events:
        ev.append([e["step"], e["neuron"], e["event"], " ".join(map(str, e["datapoints"]))])
    with open(out / "events.jsonl", "w") as fh:
        for e in traj.events:
            fh.write(json.dumps(e) + "\n")
    print(json.dumps({"steps": args.steps, "snapshots": len(traj.snapshots), "events": len(traj.events),
                      "final_loss": traj.losses[-1], "warnings": traj.warnings}))
    return 0


def cmd_spectrum(args):
    if args.grid:
        g = load_grid(args.grid)
    else:
        s, meta = load_checkpoint(args.checkpoint)
        act = parse_activation(args.activation or meta.get("activation", "relu"))
        L = args.extent
        g = GridFunction.from_network(s, act, [(-L, L)] * s.dim, (args.size,) * s.dim)
    out = _out_dir(args)
    prof = fft_grid(g)
    tables.write_csv(out / "spectrum.csv", "spectrum", np.column_stack([prof.radii, prof.M]))
    report = {"bins": len(prof.M), "bin_width": prof.bin_width, "peak_radius": float(prof.radii[np.argmax(prof.M)])}
    if args.sinogram and g.dim == 2:
        sino = radon_2d(g, n_angles=args.angles)
        A, O = np.meshgrid(sino.angles, sino.offsets, indexing="ij")
        tables.write_csv(out / "sinogram.csv", "sinogram", np.column_stack([A.ravel(), O.ravel(), sino.values.ravel()]))
    if args.objectives and g.dim == 2:
        act = parse_activation(args.activation) if args.activation else None
        for v in ("O1", "O2", "O3"):
            if v == "O3" and act is None:
                continue
            o = objective_O(v, g, act)
            report[v] = {"cylinder": o.cylinder, "euclidean": o.euclidean, "discrepancy": o.discrepancy}
    print(json.dumps(report, indent=2, default=float))
    return 0


def parse_rho(text):
    """Penalty presets: ``1``, ``k2``, ``k4``, ``exp2k`` (e^{2|k|}), ``expk2`` (e^{k^2}),
    ``power:p=..``, ``exp:a=..,q=..`` (e^{a|k|^q}) and ``g:n=..,sigma=..``."""
    name, _, rest = text.partition(":")
    kw = {k.strip(): float(v) for k, _, v in (i.partition("=") for i in rest.split(",") if i.strip())}
    fixed = {
        "1": lambda k: np.ones_like(k),
        "k2": lambda k: k**2,
        "k4": lambda k: k**4,
        "exp2k": lambda k: np.exp(2.0 * np.abs(k)),
        "expk2": lambda k: np.exp(k**2),
    }
    if name in fixed:
        return fixed[name]
    if name == "power":
        p = kw.get("p", 2.0)
        return lambda k: np.abs(k) ** p
    if name == "exp":
        a, q = kw.get("a", 1.0), kw.get("q", 1.0)
        return lambda k: np.exp(a * np.abs(k) ** q)
    if name == "g":
        return g_family_penalty(int(kw.get("n", 3)), kw.get("sigma", 1.0))
    raise ValueError(f"unknown penalty {text!r}")


def cmd_design(args):
    rho = parse_rho(args.rho)
    z, phi = design_activation(rho, args.phase_rule, FrequencyGrid(args.half_width, args.n))
    out = _out_dir(args)
    path = out / args.out
    save_two_column(path, z, phi)
    print(json.dumps({"file": str(path), "samples": len(z), "peak": float(np.abs(phi).max())}))
    return 0


def cmd_reproduce(args):
    if args.config:
        cfg = harness.ExperimentConfig.from_file(args.config)
        if cfg.experiment != args.experiment:
            raise SystemExit(f"config is for {cfg.experiment}, not {args.experiment}")
    else:
        cfg = harness.ExperimentConfig.preset(args.experiment)
    for key in ("output_dir", "seed", "replicates", "mnist_images", "mnist_labels", "threads"):
        v = getattr(args, key)
        if v is not None:
            setattr(cfg, key, v)
    bundle = harness.run_experiment(cfg)
    print(json.dumps({"output_dir": str(bundle.output_dir), "files": len(bundle.files)}))
    return 0


def cmd_inspect(args):
    status = 0
    for p in args.paths:
        try:
            print(json.dumps({"path": p, **tables.summarize(p)}, default=str))
        except (ValueError, OSError) as e:
            print(json.dumps({"path": p, "error": str(e)}))
            status = 1
    return status


def cmd_download(args):
    with urllib.request.urlopen(args.url) as r:
        raw = r.read()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != args.sha256.lower():
        print(f"checksum mismatch: got {digest}", file=sys.stderr)
        return 1
    Path(args.out).write_bytes(raw)
    print(json.dumps({"file": args.out, "sha256": digest}))
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="radonspline")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-kernel", help="fit output weights on frozen random breakplanes")
    p.add_argument("--activation", default="relu")
    p.add_argument("--solver", choices=["equality", "mse-ball", "gd", "sgd", "adam"], default="equality")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=4000)
    p.add_argument("--n-train", type=int, default=20)
    p.add_argument("--data", help="text file with rows x_1 .. x_D, y")
    p.add_argument("--lr", type=float)
    p.add_argument("--max-iters", type=int, default=200_000)
    p.add_argument("--allow-lsq", action="store_true")
    p.add_argument("--grid", type=int, default=65)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_fit_kernel)

    p = sub.add_parser("simulate-adaptive", help="integrate breakplane dynamics")
    p.add_argument("--param", choices=["spline", "weights"], default="spline")
    p.add_argument("--activation", default="relu")
    p.add_argument("--dataset", default="two-point", help="'two-point' or a text file with rows x_1 .. x_D, y")
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--step-size", type=float, default=1e-3)
    p.add_argument("--method", choices=["euler", "rk4"], default="euler")
    p.add_argument("--snapshot-every", type=int, default=100)
    p.add_argument("--freeze-mu", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze-spectrum", help="total magnitude, sinogram and objectives of a grid")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--grid")
    src.add_argument("--checkpoint")
    p.add_argument("--activation")
    p.add_argument("--extent", type=float, default=4.0)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--sinogram", action="store_true")
    p.add_argument("--angles", type=int, default=180)
    p.add_argument("--objectives", action="store_true")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("design-activation", help="sample the activation for a spectral penalty")
    p.add_argument("--rho", required=True, help=parse_rho.__doc__)
    p.add_argument("--phase-rule", choices=["real_even", "causal_step"], default="real_even")
    p.add_argument("--half-width", type=float, default=32.0)
    p.add_argument("--n", type=int, default=2**14)
    p.add_argument("--out", default="activation.txt")
    p.add_argument("--output-dir")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("reproduce", help="run one of the four experiments")
    p.add_argument("experiment", choices=["exp1", "exp2", "exp3", "exp4"])
    p.add_argument("--config")
    p.add_argument("--output-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--mnist-images")
    p.add_argument("--mnist-labels")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("inspect", help="load emitted files and check their schema")
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("download-mnist", help="fetch an IDX file and verify its sha256")
    p.add_argument("--url", required=True)
    p.add_argument("--sha256", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_download)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
