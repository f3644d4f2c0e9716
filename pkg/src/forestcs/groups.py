"""Group sets for joint/tree/forest sparsity and the duplication machinery.

Coefficients of the T channels are stacked as one length-T*N vector, channel
t occupying indices [t*N, (t+1)*N).  Groups are index lists into that vector:

* joint  -- one size-T cross-channel group per coefficient position
            (a partition, no overlap);
* tree   -- per channel, one {node, parent} pair per non-root tree node,
            plus singletons for roots and approximation coefficients;
* forest -- one group per non-root node position holding the node and its
            parent across *all* channels (size 2T), plus size-T cross-channel
            groups for root and approximation positions.

Overlapping groups are made disjoint by duplication: a binary matrix G with
one 1 per row copies each coefficient once per group containing it.  G is
never materialized; `expand` and `collapse` apply G and G^T via index maps.
"""

import numpy as np
from dataclasses import dataclass


@dataclass
class GroupLayout:
    """An ordered set of (possibly overlapping) coefficient groups."""

    groups: list  # list of int arrays indexing the stacked TN vector
    model: str  # "joint" | "tree" | "forest"
    n_channels: int
    coeffs_per_channel: int

    @property
    def total_coeffs(self):
        return self.n_channels * self.coeffs_per_channel


@dataclass
class DuplicationMap:
    """Index-map form of the duplication matrix G (one 1 per row)."""

    row_to_coeff: np.ndarray  # length D; row r copies coefficient row_to_coeff[r]
    offsets: np.ndarray  # group boundaries in the duplicated vector, length G+1
    multiplicity: np.ndarray  # number of groups containing each coefficient

    @property
    def n_rows(self):
        return int(self.row_to_coeff.size)

    @property
    def max_multiplicity(self):
        return int(self.multiplicity.max())


def build_group_layout(tree, n_channels, model):
    """Construct the group set of one sparsity model over a tree layout.

    Group order is canonical (by node index, then channel) so layouts are
    reproducible across runs.
    """
    if n_channels < 1:
        raise ValueError("n_channels must be >= 1")
    if model not in ("joint", "tree", "forest"):
        raise ValueError(f"unknown group model {model!r}")
    big_t = n_channels
    n = tree.n_coeffs
    chan = np.arange(big_t) * n
    groups = []
    if model == "joint":
        for i in range(n):
            groups.append(chan + i)
    elif model == "tree":
        for i in range(n):
            p = tree.parent[i]
            for t in range(big_t):
                if p >= 0:
                    groups.append(np.array([t * n + i, t * n + p]))
                else:
                    # roots and approximation coefficients: singletons
                    groups.append(np.array([t * n + i]))
    else:  # forest
        for i in range(n):
            p = tree.parent[i]
            if p >= 0:
                groups.append(np.concatenate([chan + i, chan + p]))
            else:
                groups.append(chan + i)
    return GroupLayout(groups=groups, model=model, n_channels=big_t,
                       coeffs_per_channel=n)


def build_duplication_map(layout):
    """Duplication map G for a group layout: D rows, one per group slot."""
    sizes = [len(g) for g in layout.groups]
    row_to_coeff = np.concatenate(layout.groups).astype(int)
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    multiplicity = np.bincount(row_to_coeff, minlength=layout.total_coeffs)
    return DuplicationMap(row_to_coeff=row_to_coeff, offsets=offsets,
                          multiplicity=multiplicity)


def expand(dmap, theta):
    """Apply G: duplicate each coefficient into every group containing it."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != dmap.multiplicity.size:
        raise ValueError(
            f"expected coefficient vector of length {dmap.multiplicity.size}, "
            f"got {theta.size}"
        )
    return theta[dmap.row_to_coeff]


def collapse(dmap, w):
    """Apply G^T: sum duplicated entries back per coefficient."""
    w = np.asarray(w, dtype=float).ravel()
    if w.size != dmap.n_rows:
        raise ValueError(f"expected duplicated vector of length {dmap.n_rows}, "
                         f"got {w.size}")
    return np.bincount(dmap.row_to_coeff, weights=w,
                       minlength=dmap.multiplicity.size)


def group_norms(w, offsets):
    """Per-group l2 norms of a duplicated vector."""
    w = np.asarray(w, dtype=float).ravel()
    sq = np.add.reduceat(w * w, offsets[:-1])
    # reduceat misbehaves on empty groups; layouts never produce them
    return np.sqrt(sq)


def shrinkgroup(w, offsets, tau):
    """Group soft-thresholding: the proximal map of tau * sum_g ||.||_2.

    Per group g: max(||w_g|| - tau, 0) * w_g / ||w_g||; zero groups stay zero.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    w = np.asarray(w, dtype=float).ravel()
    norms = group_norms(w, offsets)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(norms[nz] - tau, 0.0) / norms[nz]
    return w * np.repeat(scale, np.diff(offsets))


def group_l21_norm(w, offsets):
    """Sum of per-group l2 norms (the mixed l2,1 norm)."""
    return float(group_norms(w, offsets).sum())
