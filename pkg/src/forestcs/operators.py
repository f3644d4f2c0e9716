"""Linear measurement operators with forward/adjoint application.

Three kinds are provided:

* dense sub-Gaussian matrices (Gaussian or Bernoulli entries, variance
  1/rows so that E||Ax||^2 = ||x||^2),
* partial-frequency operators (row selection of an orthonormal DCT-II,
  so the whole pipeline stays in real arithmetic),
* block-diagonal composites applying one sub-operator per channel.

All operators are immutable after construction and safe for concurrent
read-only use.
"""

import numpy as np
from dataclasses import dataclass
from scipy.fft import dctn, idctn

# Desk-scale guard on explicit dense matrices.
_MAX_DENSE_ENTRIES = 1 << 24


class MeasurementOperator:
    """Abstract linear map with forward and adjoint application."""

    input_dim = None
    output_dim = None

    def forward(self, x):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError

    def _check_forward(self, x):
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.input_dim:
            raise ValueError(f"expected input of length {self.input_dim}, got {x.size}")
        return x

    def _check_adjoint(self, y):
        y = np.asarray(y, dtype=float).ravel()
        if y.size != self.output_dim:
            raise ValueError(
                f"expected measurement of length {self.output_dim}, got {y.size}"
            )
        return y


class DenseOperator(MeasurementOperator):
    """Explicit dense matrix operator."""

    kind = "dense-subgaussian"

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("matrix must be 2D")
        if matrix.size > _MAX_DENSE_ENTRIES:
            raise ValueError(
                f"dense operator with {matrix.size} entries exceeds the "
                f"{_MAX_DENSE_ENTRIES} entry guard"
            )
        self.matrix = matrix
        self.output_dim, self.input_dim = matrix.shape

    def forward(self, x):
        return self.matrix @ self._check_forward(x)

    def adjoint(self, y):
        return self.matrix.T @ self._check_adjoint(y)


def make_dense_subgaussian(rows, cols, distribution="gaussian", seed=None):
    """Dense sub-Gaussian operator with i.i.d. entries of variance 1/rows."""
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    rng = np.random.default_rng(seed)
    if distribution == "gaussian":
        mat = rng.standard_normal((rows, cols)) / np.sqrt(rows)
    elif distribution == "bernoulli":
        mat = rng.choice([-1.0, 1.0], size=(rows, cols)) / np.sqrt(rows)
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return DenseOperator(mat)


@dataclass(frozen=True)
class SamplingMask:
    """Frequency-index selection over a (possibly 1D) grid."""

    shape: tuple
    selected: np.ndarray  # sorted flat indices into the grid
    ratio: float

    def as_bool(self):
        mask = np.zeros(int(np.prod(self.shape)), dtype=bool)
        mask[self.selected] = True
        return mask.reshape(self.shape)


def make_variable_density_mask(shape, ratio, decay_exponent=3.0, seed=None,
                               center="middle"):
    """Random sampling mask denser at low frequencies.

    Indices are drawn without replacement with probability proportional to
    (1 + ||f|| / f_max)^(-decay_exponent) where ||f|| is the distance from
    the spectrum center.  The center index is always included.  With
    ``center="corner"`` distances are measured from index 0 instead, which
    matches the DCT-II ordering where low frequencies sit at the origin.
    """
    if np.isscalar(shape):
        shape = (int(shape),)
    else:
        shape = tuple(int(s) for s in shape)
    if not 0.0 < ratio <= 1.0:
        raise ValueError("ratio must be in (0, 1]")
    if decay_exponent < 0:
        raise ValueError("decay_exponent must be >= 0")
    total = int(np.prod(shape))
    n_sel = int(round(ratio * total))
    n_sel = max(n_sel, 1)

    if center == "middle":
        ctr = [(s - 1) / 2.0 for s in shape]
    elif center == "corner":
        ctr = [0.0 for _ in shape]
    else:
        raise ValueError("center must be 'middle' or 'corner'")
    grids = np.meshgrid(*[np.arange(s) for s in shape], indexing="ij")
    dist = np.sqrt(sum((g - c) ** 2 for g, c in zip(grids, ctr))).ravel()
    fmax = dist.max() if dist.max() > 0 else 1.0
    weights = (1.0 + dist / fmax) ** (-decay_exponent)

    center_idx = int(np.argmin(dist))
    if n_sel >= total:
        selected = np.arange(total)
    else:
        rng = np.random.default_rng(seed)
        probs = weights.copy()
        probs[center_idx] = 0.0
        probs /= probs.sum()
        rest = rng.choice(total, size=n_sel - 1, replace=False, p=probs)
        selected = np.sort(np.concatenate([[center_idx], rest]))
    return SamplingMask(shape=shape, selected=np.asarray(selected, dtype=int),
                        ratio=ratio)


class PartialFrequencyOperator(MeasurementOperator):
    """Row selection of an orthonormal (separable) DCT-II transform.

    Being a row selection of a unitary map, ||A x||_2 <= ||x||_2 always.
    """

    kind = "partial-frequency"

    def __init__(self, mask):
        if not isinstance(mask, SamplingMask):
            raise TypeError("mask must be a SamplingMask")
        self.mask = mask
        self.shape = mask.shape
        self.input_dim = int(np.prod(mask.shape))
        self.output_dim = int(mask.selected.size)

    def forward(self, x):
        x = self._check_forward(x).reshape(self.shape)
        spectrum = dctn(x, norm="ortho")
        return spectrum.ravel()[self.mask.selected]

    def adjoint(self, y):
        y = self._check_adjoint(y)
        spectrum = np.zeros(self.input_dim)
        spectrum[self.mask.selected] = y
        return idctn(spectrum.reshape(self.shape), norm="ortho").ravel()


class BlockDiagonalOperator(MeasurementOperator):
    """Applies channel t's sub-operator to channel t only (one block per
    measurement vector)."""

    kind = "block-diagonal"

    def __init__(self, blocks):
        blocks = list(blocks)
        if not blocks:
            raise ValueError("need at least one block")
        self.blocks = blocks
        self.input_dim = sum(b.input_dim for b in blocks)
        self.output_dim = sum(b.output_dim for b in blocks)
        self._in_offsets = np.cumsum([0] + [b.input_dim for b in blocks])
        self._out_offsets = np.cumsum([0] + [b.output_dim for b in blocks])

    def forward(self, x):
        x = self._check_forward(x)
        return np.concatenate(
            [
                b.forward(x[self._in_offsets[t] : self._in_offsets[t + 1]])
                for t, b in enumerate(self.blocks)
            ]
        )

    def adjoint(self, y):
        y = self._check_adjoint(y)
        return np.concatenate(
            [
                b.adjoint(y[self._out_offsets[t] : self._out_offsets[t + 1]])
                for t, b in enumerate(self.blocks)
            ]
        )


def estimate_spectral_norm(op, iters=100, seed=0):
    """Power-iteration estimate of ||A||_2."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.input_dim)
    nv = np.linalg.norm(v)
    if nv == 0:
        return 0.0
    v /= nv
    sigma = 0.0
    for _ in range(iters):
        w = op.adjoint(op.forward(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        sigma = np.sqrt(nw)
        v = w / nw
    return float(sigma)
