"""Orthonormal multilevel wavelet transforms with explicit tree index maps.

Coefficient layout is canonical and fixed so that group indices are stable
across runs:

* 1D, length N, L levels::

      [ approx_L | detail_L | detail_{L-1} | ... | detail_1 ]

  where ``approx_L`` has ``N >> L`` entries and ``detail_l`` has ``N >> l``
  entries (coarsest detail band first, finest last).

* 2D, shape (H, W), L levels::

      [ LL_L | LH_L HL_L HH_L | LH_{L-1} HL_{L-1} HH_{L-1} | ... | LH_1 HL_1 HH_1 ]

  each subband raveled row-major.

The detail coefficients form a binary tree (1D) or quadtree (2D): a detail
coefficient at level l, position p has its children at level l-1, positions
2p and 2p+1 (1D), or the 2x2 block (2i:2i+2, 2j:2j+2) within the same
orientation subband (2D).  The coarsest-level detail coefficients are the
roots.  Approximation coefficients are excluded from the tree and listed
separately.
"""

import numpy as np
from dataclasses import dataclass, field

_SQRT2 = np.sqrt(2.0)

# Orthonormal analysis low-pass filters (periodized).
_FILTERS = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    # Daubechies-4 taps.
    "db2": np.array(
        [1 + np.sqrt(3.0), 3 + np.sqrt(3.0), 3 - np.sqrt(3.0), 1 - np.sqrt(3.0)]
    )
    / (4 * _SQRT2),
}


def _highpass(h):
    g = h[::-1].copy()
    g[1::2] *= -1.0
    return g


@dataclass
class TreeLayout:
    """Parent/child index maps over the canonical coefficient layout."""

    n_coeffs: int
    levels: int
    branching: int  # 2 for 1D, 4 for 2D
    parent: np.ndarray  # parent[i] = -1 for roots and approximation coeffs
    children: list  # children[i] = int array (empty for leaves)
    roots: np.ndarray  # coarsest-scale detail coefficients
    approx: np.ndarray  # approximation coefficients, never part of the tree

    @property
    def nodes(self):
        """All tree-node indices (every detail coefficient)."""
        mask = np.ones(self.n_coeffs, dtype=bool)
        mask[self.approx] = False
        return np.nonzero(mask)[0]


def _analyze(x, h, g, axis=-1):
    """One analysis step along `axis` with periodic extension."""
    x = np.moveaxis(x, axis, -1)
    n_in = x.shape[-1]
    n = n_in // 2
    idx = (2 * np.arange(n)[:, None] + np.arange(len(h))[None, :]) % n_in
    windows = x[..., idx]
    a = windows @ h
    d = windows @ g
    return np.moveaxis(a, -1, axis), np.moveaxis(d, -1, axis)


def _synthesize(a, d, h, g, axis=-1):
    """Adjoint (= inverse, by orthonormality) of one analysis step."""
    a = np.moveaxis(a, axis, -1)
    d = np.moveaxis(d, axis, -1)
    n = a.shape[-1]
    n_out = 2 * n
    idx = (2 * np.arange(n)[:, None] + np.arange(len(h))[None, :]) % n_out
    x = np.zeros(a.shape[:-1] + (n_out,), dtype=np.result_type(a, d))
    contrib = a[..., :, None] * h + d[..., :, None] * g
    np.add.at(x, (Ellipsis, idx), contrib)
    return np.moveaxis(x, -1, axis)


class WaveletBasis:
    """Orthonormal multilevel DWT on a 1D signal or 2D image.

    Forward then inverse is the identity and the transform preserves the
    l2 norm (both to machine precision).
    """

    def __init__(self, signal_shape, levels=3, family="haar"):
        if family not in _FILTERS:
            raise ValueError(f"unknown wavelet family {family!r}")
        if np.isscalar(signal_shape):
            signal_shape = (int(signal_shape),)
        else:
            signal_shape = tuple(int(s) for s in signal_shape)
        if len(signal_shape) not in (1, 2):
            raise ValueError("only 1D and 2D signals are supported")
        if levels < 1:
            raise ValueError("levels must be >= 1")
        for s in signal_shape:
            if s % (1 << levels) != 0:
                raise ValueError(
                    f"dimension {s} not divisible by 2^levels = {1 << levels}"
                )
        if min(signal_shape) >> levels < 1:
            raise ValueError("too many levels for this signal size")
        self.signal_shape = signal_shape
        self.levels = levels
        self.family = family
        self._h = _FILTERS[family]
        self._g = _highpass(self._h)

    @property
    def ndim(self):
        return len(self.signal_shape)

    @property
    def n_coeffs(self):
        return int(np.prod(self.signal_shape))

    # -- transforms --------------------------------------------------------

    def dwt(self, x):
        """Analysis: signal -> coefficient vector in the canonical layout."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.signal_shape:
            raise ValueError(f"expected shape {self.signal_shape}, got {x.shape}")
        h, g = self._h, self._g
        if self.ndim == 1:
            details = []
            cur = x
            for _ in range(self.levels):
                cur, d = _analyze(cur, h, g)
                details.append(d)
            return np.concatenate([cur] + details[::-1])
        details = []
        cur = x
        for _ in range(self.levels):
            lo, hi = _analyze(cur, h, g, axis=0)
            cur, lh = _analyze(lo, h, g, axis=1)
            hl, hh = _analyze(hi, h, g, axis=1)
            details.append((lh, hl, hh))
        parts = [cur.ravel()]
        for lh, hl, hh in details[::-1]:
            parts.extend([lh.ravel(), hl.ravel(), hh.ravel()])
        return np.concatenate(parts)

    def idwt(self, coeffs):
        """Synthesis: coefficient vector -> signal. Inverse of :meth:`dwt`."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_coeffs,):
            raise ValueError(f"expected {self.n_coeffs} coefficients")
        h, g = self._h, self._g
        if self.ndim == 1:
            n = self.signal_shape[0]
            na = n >> self.levels
            cur = coeffs[:na]
            pos = na
            for lev in range(self.levels, 0, -1):
                nd = n >> lev
                d = coeffs[pos : pos + nd]
                pos += nd
                cur = _synthesize(cur, d, h, g)
            return cur
        hgt, wid = self.signal_shape
        sh = (hgt >> self.levels, wid >> self.levels)
        cur = coeffs[: sh[0] * sh[1]].reshape(sh)
        pos = sh[0] * sh[1]
        for lev in range(self.levels, 0, -1):
            sh = (hgt >> lev, wid >> lev)
            n = sh[0] * sh[1]
            lh = coeffs[pos : pos + n].reshape(sh)
            hl = coeffs[pos + n : pos + 2 * n].reshape(sh)
            hh = coeffs[pos + 2 * n : pos + 3 * n].reshape(sh)
            pos += 3 * n
            lo = _synthesize(cur, lh, h, g, axis=1)
            hi = _synthesize(hl, hh, h, g, axis=1)
            cur = _synthesize(lo, hi, h, g, axis=0)
        return cur

    # -- tree structure -----------------------------------------------------

    def build_tree_layout(self):
        """Index maps for the parent/child structure of the detail bands."""
        if self.ndim == 1:
            return self._tree_1d()
        return self._tree_2d()

    def _tree_1d(self):
        n = self.signal_shape[0]
        lvl = self.levels
        na = n >> lvl
        parent = np.full(self.n_coeffs, -1, dtype=int)
        children = [np.empty(0, dtype=int) for _ in range(self.n_coeffs)]
        # offset of each detail band in the canonical layout
        offset = {}
        pos = na
        for l in range(lvl, 0, -1):
            offset[l] = pos
            pos += n >> l
        for l in range(lvl, 1, -1):
            nd = n >> l
            for p in range(nd):
                node = offset[l] + p
                kids = np.array([offset[l - 1] + 2 * p, offset[l - 1] + 2 * p + 1])
                children[node] = kids
                parent[kids] = node
        roots = np.arange(offset[lvl], offset[lvl] + (n >> lvl))
        approx = np.arange(na)
        return TreeLayout(self.n_coeffs, lvl, 2, parent, children, roots, approx)

    def _tree_2d(self):
        hgt, wid = self.signal_shape
        lvl = self.levels
        parent = np.full(self.n_coeffs, -1, dtype=int)
        children = [np.empty(0, dtype=int) for _ in range(self.n_coeffs)]
        # offsets of (orientation, level) subbands; orientation order LH, HL, HH
        na = (hgt >> lvl) * (wid >> lvl)
        offset = {}
        pos = na
        for l in range(lvl, 0, -1):
            for o in range(3):
                offset[(o, l)] = pos
                pos += (hgt >> l) * (wid >> l)

        def flat(o, l, i, j):
            return offset[(o, l)] + i * (wid >> l) + j

        for l in range(lvl, 1, -1):
            for o in range(3):
                for i in range(hgt >> l):
                    for j in range(wid >> l):
                        node = flat(o, l, i, j)
                        kids = np.array(
                            [
                                flat(o, l - 1, 2 * i + di, 2 * j + dj)
                                for di in (0, 1)
                                for dj in (0, 1)
                            ]
                        )
                        children[node] = kids
                        parent[kids] = node
        roots = np.concatenate(
            [
                np.arange(
                    offset[(o, lvl)], offset[(o, lvl)] + (hgt >> lvl) * (wid >> lvl)
                )
                for o in range(3)
            ]
        )
        approx = np.arange(na)
        return TreeLayout(self.n_coeffs, lvl, 4, parent, children, roots, approx)


class IdentityBasis:
    """Trivial basis (Phi = I); lets solvers run directly on coefficients."""

    def __init__(self, signal_shape):
        if np.isscalar(signal_shape):
            signal_shape = (int(signal_shape),)
        self.signal_shape = tuple(int(s) for s in signal_shape)
        self.levels = 0
        self.family = "identity"

    @property
    def ndim(self):
        return len(self.signal_shape)

    @property
    def n_coeffs(self):
        return int(np.prod(self.signal_shape))

    def dwt(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != self.signal_shape:
            raise ValueError(f"expected shape {self.signal_shape}, got {x.shape}")
        return x.ravel().copy()

    def idwt(self, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs.reshape(self.signal_shape).copy()
