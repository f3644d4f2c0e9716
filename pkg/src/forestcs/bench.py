"""Metrics, experiment drivers, and result/image I/O.

Experiments are Monte-Carlo batches over independent trials.  Each trial's
randomness is derived from (seed, trial index) only, and rows are emitted in
a fixed order, so a batch is byte-reproducible regardless of how many
workers execute it.
"""

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .groups import build_group_layout
from .operators import (
    BlockDiagonalOperator,
    PartialFrequencyOperator,
    make_dense_subgaussian,
    make_variable_density_mask,
)
from .solvers import (
    DivergenceError,
    SolverConfig,
    _analysis,
    fcsa_structured,
    fista,
    fista_structured,
)
from .synth import SynthesisSpec, generate_instance, measure
from .wavelet import WaveletBasis

MODELS = ("standard", "joint", "tree", "forest")

CSV_HEADER = ["model", "ratio", "trial", "snr_db", "support_f1", "iters",
              "wall_time_s"]


@dataclass
class ResultRow:
    model: str
    ratio: float
    trial: int
    snr_db: float
    support_f1: float
    iters: int
    wall_time_s: float


# -- metrics -------------------------------------------------------------------


def snr(x0, x):
    """SNR in dB: 10*log10(var(x0) / MSE(x0, x)), population variance."""
    x0 = np.asarray(x0, dtype=float)
    x = np.asarray(x, dtype=float)
    if x0.shape != x.shape:
        raise ValueError("shapes must match")
    vs = float(np.var(x0))
    if vs == 0:
        raise ValueError("ground truth is constant; SNR undefined")
    mse = float(np.mean((x0 - x) ** 2))
    if mse == 0:
        return np.inf
    return 10.0 * np.log10(vs / mse)


def support_f1(true_indices, theta_hat, threshold_fraction=0.1):
    """F1 score between the true support and the thresholded estimate."""
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must be in (0, 1)")
    true_set = set(int(i) for i in np.asarray(true_indices).ravel())
    if not true_set:
        raise ValueError("true support is empty")
    theta_hat = np.asarray(theta_hat, dtype=float).ravel()
    peak = np.abs(theta_hat).max()
    est = set(np.nonzero(np.abs(theta_hat) > threshold_fraction * peak)[0])
    inter = len(true_set & est)
    if inter == 0:
        return 0.0
    return 2.0 * inter / (len(est) + len(true_set))


# -- single-trial machinery ------------------------------------------------------


def _solve_model(model, op, b, config, basis, layouts, x_true):
    if model in ("standard", "joint"):
        if config.mu > 0:
            # the disjoint engine handles TV internally via the same config
            return fista(op, b, config, basis, model=model, x_true=x_true)
        return fista(op, b, config, basis, model=model, x_true=x_true)
    solver = fcsa_structured if config.mu > 0 else fista_structured
    return solver(op, b, config, layouts[model], basis, x_true=x_true)


def _trial_seeds(seed, trial):
    ss = np.random.SeedSequence([0 if seed is None else int(seed), int(trial)])
    return ss.generate_state(4)


def _mean_support_f1(supports, theta_hat, n_channels, threshold_fraction=0.1):
    per = np.asarray(theta_hat).reshape(n_channels, -1)
    scores = [
        support_f1(supports[t].indices, per[t], threshold_fraction)
        for t in range(n_channels)
    ]
    return float(np.mean(scores))


def _run_trial_partial_frequency(trial, seed, basis, tree, spec, ratio,
                                 decay_exponent, models, layouts, config):
    s_inst, s_mask, s_noise, _ = _trial_seeds(seed, trial)
    inst_spec = SynthesisSpec(
        n_channels=spec.n_channels,
        k=spec.k,
        model=spec.model,
        amplitude_law=spec.amplitude_law,
        amplitude_scale=spec.amplitude_scale,
        noise_sigma=spec.noise_sigma,
        seed=int(s_inst),
    )
    x, theta, supports = generate_instance(inst_spec, tree, basis)
    blocks = [
        PartialFrequencyOperator(
            make_variable_density_mask(
                basis.signal_shape, ratio, decay_exponent,
                seed=int(s_mask) + t, center="corner",
            )
        )
        for t in range(spec.n_channels)
    ]
    op = BlockDiagonalOperator(blocks)
    b = measure(x, op, inst_spec.noise_sigma, seed=int(s_noise))
    rows = []
    for model in models:
        rows.append(
            _score_solve(model, op, b, config, basis, layouts, x, theta,
                         supports, ratio, trial)
        )
    return rows


def _score_solve(model, op, b, config, basis, layouts, x_true, theta_true,
                 supports, ratio, trial):
    try:
        res = _solve_model(model, op, b, config, basis, layouts, x_true=None)
        theta_hat = _analysis(basis, res.x_hat)
        return ResultRow(
            model=model,
            ratio=ratio,
            trial=trial,
            snr_db=snr(x_true, res.x_hat),
            support_f1=_mean_support_f1(supports, theta_hat, x_true.shape[0]),
            iters=res.iters_run,
            # zeroed so batch outputs are byte-reproducible; per-solve timing
            # lives on SolverResult.wall_time
            wall_time_s=0.0,
        )
    except DivergenceError:
        return ResultRow(model=model, ratio=ratio, trial=trial,
                         snr_db=-np.inf, support_f1=0.0, iters=0,
                         wall_time_s=0.0)


def _map_trials(fn, trials, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(fn, range(trials)))
    else:
        per_trial = [fn(i) for i in range(trials)]
    return [row for rows in per_trial for row in rows]


# -- experiment drivers -----------------------------------------------------------


def _default_levels(k, n):
    """Deep enough for a size-k rooted subtree (a depth-L root spans
    2^L - 1 nodes), at least the customary 3."""
    need = max(3, int(np.ceil(np.log2(k + 1))))
    return min(need, int(np.log2(n)) - 1)


def run_compare(n_channels=3, n=1024, k=50, ratio=0.3, trials=20,
                models=MODELS, data_model="forest", noise_sigma=0.01,
                levels=None, family="haar", amplitude_law="uniform-magnitude",
                amplitude_scale=1.0, decay_exponent=3.0, config=None,
                seed=0, workers=1):
    """Compare sparsity models on synthetic structured data at one ratio."""
    if levels is None:
        levels = _default_levels(k, n)
    basis = WaveletBasis(n, levels=levels, family=family)
    tree = basis.build_tree_layout()
    spec = SynthesisSpec(n_channels=n_channels, k=k, model=data_model,
                         amplitude_law=amplitude_law,
                         amplitude_scale=amplitude_scale,
                         noise_sigma=noise_sigma)
    config = config or SolverConfig()
    layouts = {
        m: build_group_layout(tree, n_channels, m)
        for m in models if m in ("tree", "forest")
    }

    def one(trial):
        return _run_trial_partial_frequency(
            trial, seed, basis, tree, spec, ratio, decay_exponent, models,
            layouts, config,
        )

    return _map_trials(one, trials, workers)


def run_sweep(ratios, **kwargs):
    """run_compare at every sampling ratio, concatenated."""
    ratios = list(ratios)
    if not ratios:
        raise ValueError("need at least one ratio")
    rows = []
    for ratio in ratios:
        rows.extend(run_compare(ratio=ratio, **kwargs))
    return rows


def median_snr_by_model(rows):
    """{model: {ratio: median snr}} over trials."""
    out = {}
    for row in rows:
        out.setdefault(row.model, {}).setdefault(row.ratio, []).append(
            row.snr_db
        )
    return {
        m: {r: float(np.median(v)) for r, v in ratios.items()}
        for m, ratios in out.items()
    }


def run_phase(m_values, n_channels=4, n=256, k=8, trials=50, models=MODELS,
              levels=None, family="haar", amplitude_law="uniform-magnitude",
              amplitude_scale=1.0, config=None, seed=0, workers=1,
              success_f1=0.99, success_rate=0.9):
    """Success-probability grid over per-channel measurement counts M.

    Noiseless dense sub-Gaussian blocks; success means mean per-channel
    support F1 >= `success_f1`.  Returns (rows, summary) where summary maps
    each model to its minimal M reaching `success_rate` after monotone
    cleanup (np.inf when unreachable) plus the raw and cleaned-up rates.
    """
    if levels is None:
        levels = _default_levels(k, n)
    basis = WaveletBasis(n, levels=levels, family=family)
    tree = basis.build_tree_layout()
    spec = SynthesisSpec(n_channels=n_channels, k=k, model="forest",
                         amplitude_law=amplitude_law,
                         amplitude_scale=amplitude_scale, noise_sigma=0.0)
    config = config or SolverConfig(lam=0.01, max_iters=400, tol=1e-7)
    layouts = {
        m: build_group_layout(tree, n_channels, m)
        for m in models if m in ("tree", "forest")
    }
    m_values = sorted(int(m) for m in m_values)

    def one(trial):
        s_inst, s_op, _, _ = _trial_seeds(seed, trial)
        inst_spec = SynthesisSpec(
            n_channels=n_channels, k=k, model="forest",
            amplitude_law=amplitude_law, amplitude_scale=amplitude_scale,
            noise_sigma=0.0, seed=int(s_inst),
        )
        x, theta, supports = generate_instance(inst_spec, tree, basis)
        rows = []
        for m_idx, m in enumerate(m_values):
            blocks = [
                make_dense_subgaussian(m, n, seed=int(s_op) + 1000 * m_idx + t)
                for t in range(n_channels)
            ]
            op = BlockDiagonalOperator(blocks)
            b = measure(x, op, 0.0)
            for model in models:
                row = _score_solve(model, op, b, config, basis, layouts, x,
                                   theta, supports, float(m) / n, trial)
                row.ratio = float(m) / n
                rows.append(row)
        return rows

    rows = _map_trials(one, trials, workers)

    summary = {}
    for model in models:
        raw = []
        for m in m_values:
            ratio = float(m) / n
            scores = [r.support_f1 for r in rows
                      if r.model == model and r.ratio == ratio]
            raw.append(float(np.mean([s >= success_f1 for s in scores])))
        cleaned = np.maximum.accumulate(raw).tolist()
        m90 = np.inf
        for m, rate in zip(m_values, cleaned):
            if rate >= success_rate:
                m90 = m
                break
        summary[model] = {"m_values": list(m_values), "raw": raw,
                          "monotone": cleaned, "m_star": m90}
    return rows, summary


# -- image pipeline -----------------------------------------------------------------


def _read_token(f):
    # skip whitespace and '#' comments between header tokens
    token = b""
    while True:
        ch = f.read(1)
        if not ch:
            raise ValueError("truncated header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_image(path, crop_dyadic=False):
    """Read a binary PGM (P5) or PPM (P6) file into a (T, H, W) array in [0, 1]."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"unsupported magic {magic!r}; need binary P5/P6")
        width = int(_read_token(f))
        height = int(_read_token(f))
        maxval = int(_read_token(f))
        if maxval != 255:
            raise ValueError(f"unsupported maxval {maxval}; need 255")
        n_channels = 1 if magic == b"P5" else 3
        data = f.read(width * height * n_channels)
        if len(data) != width * height * n_channels:
            raise ValueError("truncated pixel data")
    arr = np.frombuffer(data, dtype=np.uint8).astype(float) / 255.0
    if n_channels == 1:
        img = arr.reshape(1, height, width)
    else:
        img = np.moveaxis(arr.reshape(height, width, 3), -1, 0)
    if crop_dyadic:
        img = center_crop_dyadic(img)
    return img


def center_crop_dyadic(img):
    """Center-crop each spatial dim to the largest power of two that fits."""
    _, h, w = img.shape
    h2 = 1 << (h.bit_length() - 1)
    w2 = 1 << (w.bit_length() - 1)
    top = (h - h2) // 2
    left = (w - w2) // 2
    return img[:, top : top + h2, left : left + w2]


def write_image(path, signal):
    """Write a (T, H, W) array in [0, 1] as binary PGM (T=1) or PPM (T=3)."""
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 3 or signal.shape[0] not in (1, 3):
        raise ValueError("expected (T, H, W) with T in {1, 3}")
    t, h, w = signal.shape
    pixels = np.clip(np.round(signal * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n" if t == 1 else b"P6\n")
        f.write(f"{w} {h}\n255\n".encode())
        if t == 1:
            f.write(pixels[0].tobytes())
        else:
            f.write(np.moveaxis(pixels, 0, -1).tobytes())


def run_image(path, ratio=0.25, models=MODELS, levels=3, family="haar",
              decay_exponent=3.0, noise_sigma=0.01, config=None, seed=0,
              out_dir=None):
    """Reconstruct a PGM/PPM image from undersampled frequency measurements."""
    import os

    x = read_image(path, crop_dyadic=True)
    n_channels = x.shape[0]
    basis = WaveletBasis(x.shape[1:], levels=levels, family=family)
    tree = basis.build_tree_layout()
    config = config or SolverConfig()
    layouts = {
        m: build_group_layout(tree, n_channels, m)
        for m in models if m in ("tree", "forest")
    }
    s_mask, s_noise, _, _ = _trial_seeds(seed, 0)
    blocks = [
        PartialFrequencyOperator(
            make_variable_density_mask(basis.signal_shape, ratio,
                                       decay_exponent, seed=int(s_mask) + t,
                                       center="corner")
        )
        for t in range(n_channels)
    ]
    op = BlockDiagonalOperator(blocks)
    b = measure(x, op, noise_sigma, seed=int(s_noise))
    rows = []
    for model in models:
        res = _solve_model(model, op, b, config, basis, layouts, x_true=None)
        rows.append(ResultRow(model=model, ratio=ratio, trial=0,
                              snr_db=snr(x, res.x_hat), support_f1=np.nan,
                              iters=res.iters_run, wall_time_s=0.0))
        if out_dir is not None:
            out = os.path.join(out_dir, f"recon_{model}.{'pgm' if n_channels == 1 else 'ppm'}")
            write_image(out, np.clip(res.x_hat, 0.0, 1.0))
    return rows


# -- output artifacts -------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, float):
        if np.isnan(value):
            return "nan"
        return repr(value)
    return str(value)


def write_csv(rows, path):
    """RFC-4180 CSV with the fixed schema header."""
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([
            row.model,
            _fmt(float(row.ratio)),
            row.trial,
            _fmt(float(row.snr_db)),
            _fmt(float(row.support_f1)),
            row.iters,
            _fmt(float(row.wall_time_s)),
        ])
    with open(path, "w", newline="") as f:
        f.write(buf.getvalue())


def write_svg_chart(rows, path, width=640, height=420, pad=50):
    """Static SVG line chart of median SNR vs sampling ratio, one polyline
    per model."""
    medians = median_snr_by_model(rows)
    if not medians:
        raise ValueError("no rows to chart")
    ratios = sorted({r for per in medians.values() for r in per})
    finite = [v for per in medians.values() for v in per.values()
              if np.isfinite(v)]
    lo, hi = (min(finite), max(finite)) if finite else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    rlo, rhi = min(ratios), max(ratios)
    if rhi == rlo:
        rhi = rlo + 1.0

    def sx(r):
        return pad + (r - rlo) / (rhi - rlo) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - lo) / (hi - lo) * (height - 2 * pad)

    colors = {"standard": "#888888", "joint": "#1f77b4", "tree": "#2ca02c",
              "forest": "#d62728"}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" '
        f'y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" '
        f'stroke="black"/>',
    ]
    for idx, (model, per) in enumerate(sorted(medians.items())):
        pts = " ".join(
            f"{sx(r):.2f},{sy(per[r]):.2f}"
            for r in sorted(per)
            if np.isfinite(per[r])
        )
        color = colors.get(model, "#000000")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" '
            f'points="{pts}"/>'
        )
        parts.append(
            f'<text x="{width - pad + 4}" y="{pad + 16 * idx}" '
            f'font-size="12" fill="{color}">{model}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")
