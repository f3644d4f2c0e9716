"""Synthetic structured-sparse data: supports, coefficients, measurements.

Four support models, mirroring the solver models:

* standard -- each channel gets an independent arbitrary k-subset of the
  tree nodes;
* joint    -- all channels share one arbitrary k-subset;
* tree     -- each channel gets an independent rooted connected subtree;
* forest   -- all channels share one rooted connected subtree.

Supports live on the detail (tree) coefficients only, so each channel has
exactly k nonzeros and connectivity is meaningful.  Subtrees are sampled by
uniform frontier growth: start at a root chosen uniformly, then repeatedly
add a uniformly-chosen frontier child.  This is not uniform over all size-k
subtrees; `enumerate_rooted_subtrees` provides the exhaustive list for
exact-uniform sampling and for oracle tests at small sizes.
"""

import numpy as np
from dataclasses import dataclass

# Combinatorial guards for exhaustive enumeration.
_ENUM_MAX_NODES = 64
_ENUM_MAX_K = 8


@dataclass
class SparseSupport:
    indices: np.ndarray  # sorted coefficient indices
    k: int
    connected: bool

    def __post_init__(self):
        self.indices = np.sort(np.asarray(self.indices, dtype=int))
        if self.indices.size != self.k:
            raise ValueError("support size does not match k")


@dataclass
class SynthesisSpec:
    n_channels: int
    k: int
    model: str  # standard | joint | tree | forest
    amplitude_law: str = "gaussian"  # or "uniform-magnitude"
    amplitude_scale: float = 1.0
    noise_sigma: float = 0.01
    seed: int = None

    def __post_init__(self):
        if self.model not in ("standard", "joint", "tree", "forest"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _subtree_size(tree, root):
    size = 0
    stack = [root]
    while stack:
        node = stack.pop()
        size += 1
        stack.extend(tree.children[node])
    return size


def sample_rooted_subtree(tree, k, rng=None):
    """Connected size-k support grown from a uniformly-chosen root."""
    rng = np.random.default_rng(rng)
    if k < 1:
        raise ValueError("k must be >= 1")
    root = int(rng.choice(tree.roots))
    if _subtree_size(tree, root) < k:
        raise ValueError(f"no size-{k} subtree under root {root}")
    chosen = [root]
    frontier = list(tree.children[root])
    while len(chosen) < k:
        pick = int(rng.integers(len(frontier)))
        node = frontier.pop(pick)
        chosen.append(node)
        frontier.extend(tree.children[node])
    return SparseSupport(indices=np.array(chosen), k=k, connected=True)


def enumerate_rooted_subtrees(tree, k):
    """All rooted connected size-k subtrees, duplicate-free.

    Enumerates per root with the include/exclude-forever frontier recursion,
    guarded to small instances.
    """
    if tree.n_coeffs > _ENUM_MAX_NODES or k > _ENUM_MAX_K:
        raise ValueError(
            f"enumeration guarded to <= {_ENUM_MAX_NODES} coefficients and "
            f"k <= {_ENUM_MAX_K}"
        )
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []

    def recurse(chosen, frontier):
        if len(chosen) == k:
            out.append(SparseSupport(indices=np.array(chosen), k=k,
                                     connected=True))
            return
        # choose the next frontier node to include; nodes skipped at this
        # depth are excluded from the subtree forever (avoids duplicates)
        for i, node in enumerate(frontier):
            new_frontier = frontier[i + 1 :] + list(tree.children[node])
            recurse(chosen + [node], new_frontier)

    for root in tree.roots:
        recurse([int(root)], list(tree.children[root]))
    return out


def is_connected_support(tree, indices):
    """True when the index set is a rooted connected subtree."""
    s = set(int(i) for i in indices)
    roots_in = [i for i in s if tree.parent[i] < 0]
    if len(roots_in) != 1:
        return False
    for i in s:
        p = tree.parent[i]
        if p >= 0 and p not in s:
            return False
    return True


def _draw_values(rng, k, law, scale):
    if law == "gaussian":
        return scale * rng.standard_normal(k)
    if law == "uniform-magnitude":
        signs = rng.choice([-1.0, 1.0], size=k)
        return scale * signs * rng.uniform(0.5, 1.5, size=k)
    raise ValueError(f"unknown amplitude law {law!r}")


def generate_instance(spec, tree, basis):
    """Draw (x, theta, supports) for one synthetic instance.

    Returns the multi-channel signal x of shape (T,)+signal_shape, the
    per-channel coefficients theta of shape (T, N), and the list of
    per-channel supports.
    """
    rng = np.random.default_rng(spec.seed)
    big_t = spec.n_channels
    n = tree.n_coeffs
    nodes = tree.nodes
    if spec.k > nodes.size:
        raise ValueError("k exceeds the number of tree nodes")

    if spec.model == "forest":
        shared = sample_rooted_subtree(tree, spec.k, rng)
        supports = [shared] * big_t
    elif spec.model == "joint":
        idx = rng.choice(nodes, size=spec.k, replace=False)
        shared = SparseSupport(indices=idx, k=spec.k,
                               connected=is_connected_support(tree, idx))
        supports = [shared] * big_t
    elif spec.model == "tree":
        supports = [sample_rooted_subtree(tree, spec.k, rng)
                    for _ in range(big_t)]
    else:  # standard
        supports = []
        for _ in range(big_t):
            idx = rng.choice(nodes, size=spec.k, replace=False)
            supports.append(
                SparseSupport(indices=idx, k=spec.k,
                              connected=is_connected_support(tree, idx))
            )

    theta = np.zeros((big_t, n))
    for t in range(big_t):
        theta[t, supports[t].indices] = _draw_values(
            rng, spec.k, spec.amplitude_law, spec.amplitude_scale
        )
    x = np.stack([basis.idwt(theta[t]) for t in range(big_t)])
    return x, theta, supports


def measure(x, op, noise_sigma=0.0, seed=None):
    """b = A x + sigma * g with standard-normal g, reproducible from seed."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    b = op.forward(np.asarray(x, dtype=float).ravel())
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        b = b + noise_sigma * rng.standard_normal(b.size)
    return b


def shape_energy(x, profile):
    """Rescale each channel so its l2 norm matches the requested profile."""
    x = np.asarray(x, dtype=float)
    profile = np.asarray(profile, dtype=float)
    if profile.size != x.shape[0]:
        raise ValueError("profile length must equal the channel count")
    if np.any(profile < 0):
        raise ValueError("profile must be nonnegative")
    out = np.zeros_like(x)
    for t in range(x.shape[0]):
        norm = np.linalg.norm(x[t])
        if profile[t] > 0 and norm == 0:
            raise ValueError(f"channel {t} is zero but asked to carry energy")
        if norm > 0:
            out[t] = x[t] * (profile[t] / norm)
    return out
