"""Command-line interface.

    forestcs <subcommand> --config FILE [--key value ...] --out DIR --seed N

Subcommands: compare, sweep, phase, bounds, image, synth.  Options come from
an optional flat key=value config file, overridable by ``--key value`` flags;
all randomness flows from ``--seed``.
"""

import argparse
import os
import sys

import numpy as np

from . import bench, theory
from .solvers import SolverConfig


def _parse_scalar(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def _parse_value(text):
    if "," in text:
        return [_parse_scalar(p) for p in text.split(",") if p]
    return _parse_scalar(text)


def read_config(path):
    """Flat key=value file; blank lines and '#' comments ignored."""
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = _parse_value(value.strip())
    return out


def _collect_options(args, extra):
    opts = {}
    if args.config:
        opts.update(read_config(args.config))
    it = iter(extra)
    for token in it:
        if not token.startswith("--"):
            raise SystemExit(f"unexpected argument {token!r}")
        key = token[2:].replace("-", "_")
        try:
            value = next(it)
        except StopIteration:
            raise SystemExit(f"missing value for {token!r}")
        opts[key] = _parse_value(value)
    return opts


def _solver_config(opts):
    kwargs = {}
    for key in ("lam", "gamma", "mu", "rho", "max_iters", "tol",
                "tv_inner_iters"):
        if key in opts:
            kwargs[key] = opts.pop(key)
    return SolverConfig(**kwargs) if kwargs else None


def _as_list(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _driver_kwargs(opts, allowed):
    unknown = set(opts) - set(allowed)
    if unknown:
        raise SystemExit(f"unknown option(s): {', '.join(sorted(unknown))}")
    return opts


_COMPARE_KEYS = ("n_channels", "n", "k", "ratio", "trials", "models",
                 "data_model", "noise_sigma", "levels", "family",
                 "amplitude_law", "amplitude_scale", "decay_exponent",
                 "workers")


def cmd_compare(args, extra):
    opts = _collect_options(args, extra)
    config = _solver_config(opts)
    if "models" in opts:
        opts["models"] = tuple(_as_list(opts["models"]))
    kwargs = _driver_kwargs(opts, _COMPARE_KEYS)
    rows = bench.run_compare(config=config, seed=args.seed, **kwargs)
    bench.write_csv(rows, os.path.join(args.out, "results.csv"))
    for model, per in sorted(bench.median_snr_by_model(rows).items()):
        for ratio, med in sorted(per.items()):
            print(f"{model:<9s} ratio={ratio:.3f} median SNR = {med:.2f} dB")
    return 0


def cmd_sweep(args, extra):
    opts = _collect_options(args, extra)
    config = _solver_config(opts)
    ratios = _as_list(opts.pop("ratios", [0.16, 0.18, 0.2, 0.22, 0.24, 0.26]))
    if "models" in opts:
        opts["models"] = tuple(_as_list(opts["models"]))
    kwargs = _driver_kwargs(opts, _COMPARE_KEYS)
    rows = bench.run_sweep(ratios, config=config, seed=args.seed, **kwargs)
    bench.write_csv(rows, os.path.join(args.out, "results.csv"))
    bench.write_svg_chart(rows, os.path.join(args.out, "snr_vs_ratio.svg"))
    for model, per in sorted(bench.median_snr_by_model(rows).items()):
        line = " ".join(f"{r:.2f}:{v:.2f}" for r, v in sorted(per.items()))
        print(f"{model:<9s} {line}")
    return 0


def cmd_phase(args, extra):
    opts = _collect_options(args, extra)
    config = _solver_config(opts)
    m_values = _as_list(opts.pop("m_values", [16, 24, 32, 40, 48, 64, 96]))
    if "models" in opts:
        opts["models"] = tuple(_as_list(opts["models"]))
    kwargs = _driver_kwargs(
        opts,
        ("n_channels", "n", "k", "trials", "models", "levels", "family",
         "amplitude_law", "amplitude_scale", "workers", "success_f1",
         "success_rate"),
    )
    rows, summary = bench.run_phase(m_values, config=config, seed=args.seed,
                                    **kwargs)
    bench.write_csv(rows, os.path.join(args.out, "results.csv"))
    with open(os.path.join(args.out, "phase_summary.csv"), "w") as f:
        f.write("model,m_star\n")
        for model, info in summary.items():
            f.write(f"{model},{info['m_star']}\n")
    for model, info in summary.items():
        print(f"{model:<9s} M*={info['m_star']}")
    return 0


def cmd_bounds(args, extra):
    opts = _collect_options(args, extra)
    kwargs = _driver_kwargs(
        opts, ("N", "k", "T", "delta", "t", "c1", "c2", "c3", "c4"))
    params = theory.BoundParams(
        N=int(kwargs.get("N", 1024)), k=int(kwargs.get("k", 32)),
        T=int(kwargs.get("T", 4)), delta=float(kwargs.get("delta", 0.5)),
        t=float(kwargs.get("t", 1.0)), c1=float(kwargs.get("c1", 1.0)),
        c2=float(kwargs.get("c2", 1.0)), c3=float(kwargs.get("c3", 1.0)),
        c4=float(kwargs.get("c4", 1.0)),
    )
    path = os.path.join(args.out, "bounds.csv")
    with open(path, "w") as f:
        f.write("model,total_measurements\n")
        for model in bench.MODELS:
            tm = theory.measurement_bound(model, params)
            f.write(f"{model},{tm!r}\n")
            print(f"{model:<9s} TM >= {tm:.1f}")
    return 0


def cmd_image(args, extra):
    opts = _collect_options(args, extra)
    config = _solver_config(opts)
    path = opts.pop("path", None)
    if path is None:
        raise SystemExit("image requires --path FILE (binary PGM/PPM)")
    if "models" in opts:
        opts["models"] = tuple(_as_list(opts["models"]))
    kwargs = _driver_kwargs(
        opts,
        ("ratio", "models", "levels", "family", "decay_exponent",
         "noise_sigma"),
    )
    rows = bench.run_image(path, config=config, seed=args.seed,
                           out_dir=args.out, **kwargs)
    bench.write_csv(rows, os.path.join(args.out, "results.csv"))
    for row in rows:
        print(f"{row.model:<9s} SNR = {row.snr_db:.2f} dB")
    return 0


def cmd_synth(args, extra):
    from .synth import SynthesisSpec, generate_instance
    from .wavelet import WaveletBasis

    opts = _collect_options(args, extra)
    kwargs = _driver_kwargs(
        opts,
        ("n_channels", "n", "k", "model", "levels", "family",
         "amplitude_law", "amplitude_scale", "noise_sigma"),
    )
    n = int(kwargs.pop("n", 1024))
    basis = WaveletBasis(n, levels=int(kwargs.pop("levels", 3)),
                         family=kwargs.pop("family", "haar"))
    tree = basis.build_tree_layout()
    spec = SynthesisSpec(
        n_channels=int(kwargs.pop("n_channels", 3)),
        k=int(kwargs.pop("k", 50)),
        model=kwargs.pop("model", "forest"),
        seed=args.seed,
        **kwargs,
    )
    x, theta, supports = generate_instance(spec, tree, basis)
    path = os.path.join(args.out, "instance.npz")
    np.savez(path, x=x, theta=theta,
             supports=np.stack([s.indices for s in supports]))
    print(f"wrote {path}: x {x.shape}, theta {theta.shape}")
    return 0


_COMMANDS = {
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "phase": cmd_phase,
    "bounds": cmd_bounds,
    "image": cmd_image,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="forestcs",
        description="Structured-sparsity compressive sensing experiments.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None,
                        help="flat key=value config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    args, extra = parser.parse_known_args(argv)
    os.makedirs(args.out, exist_ok=True)
    return _COMMANDS[args.command](args, extra)


if __name__ == "__main__":
    sys.exit(main())
