"""Subspace counts, measurement bounds, and block-diagonal energy factors.

The bound calculators evaluate the explicit union-of-subspaces expression

    TM >= (2 / (c1 * delta)) * (ln(2L) + Tk * ln(12/delta) + t)

with the subspace count L of each sparsity model:

* standard -- L = C(N,k)^T ~ (eN/k)^(Tk)  (independent arbitrary supports),
* joint    -- L = C(N,k)   ~ (eN/k)^k     (one shared arbitrary support),
* tree     -- L = L_T^T                   (independent rooted subtrees),
* forest   -- L = L_T                     (one shared rooted subtree),

where ln L_T uses the two-regime subtree count: k + ln(N/(k+1)) for
k <= floor(log2 N) and k*ln4 + ln(c2*N/k) above it.  The absolute constants
are exposed as parameters (default 1.0); orderings are only meaningful when
compared under identical constants.
"""

import math
from dataclasses import dataclass

import numpy as np

from .operators import BlockDiagonalOperator, make_dense_subgaussian
from .synth import sample_rooted_subtree

_CATALAN_MAX = 30


@dataclass
class BoundParams:
    N: int
    k: int
    T: int = 1
    delta: float = 0.5
    t: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.k > self.N:
            raise ValueError("k must be <= N")
        for name in ("c1", "c2", "c3", "c4"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class EnergyFactors:
    gamma_2: float
    gamma_inf: float


def catalan(k):
    """Exact k-th Catalan number C_k = binom(2k, k) / (k + 1)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > _CATALAN_MAX:
        raise ValueError(f"k > {_CATALAN_MAX} exceeds the exact-integer guard")
    return math.comb(2 * k, k) // (k + 1)


def subtree_count_bound(N, k, c4=1.0):
    """Two-regime upper bound on the number of size-k rooted subtrees.

    Returns (bound, exact) where exact is the Catalan count when it applies
    (small-k regime, within the integer guard) and None otherwise.
    """
    if N < 1 or k < 1:
        raise ValueError("N and k must be >= 1")
    if k <= math.floor(math.log2(N)):
        bound = math.e**k * N / (k + 1)
        exact = catalan(k) if k <= _CATALAN_MAX else None
    else:
        bound = 4.0**k * c4 * N / k
        exact = None
    return bound, exact


def _log_subtree_count(p):
    """ln L_T under the two-regime bound."""
    if p.k <= math.floor(math.log2(p.N)):
        return p.k + math.log(p.N / (p.k + 1))
    return p.k * math.log(4.0) + math.log(p.c2 * p.N / p.k)


def _log_binom_bound(p):
    """ln C(N,k) upper bound k*ln(eN/k)."""
    return p.k * math.log(math.e * p.N / p.k)


def measurement_bound(model, p):
    """Total measurements TM required by one sparsity model."""
    if model == "standard":
        log_l = p.T * _log_binom_bound(p)
    elif model == "joint":
        log_l = _log_binom_bound(p)
    elif model == "tree":
        log_l = p.T * _log_subtree_count(p)
    elif model == "forest":
        log_l = _log_subtree_count(p)
    else:
        raise ValueError(f"unknown model {model!r}")
    sparsity = p.T * p.k
    return (2.0 / (p.c1 * p.delta)) * (
        math.log(2.0) + log_l + sparsity * math.log(12.0 / p.delta) + p.t
    )


def energy_factors(x):
    """Gamma_2 and Gamma_inf energy-spread factors of a multi-channel signal."""
    x = np.asarray(x, dtype=float)
    energies = np.array([float(ch.ravel() @ ch.ravel()) for ch in x])
    total = energies.sum()
    if total == 0:
        raise ValueError("signal is identically zero")
    gamma_2 = total**2 / (energies**2).sum()
    gamma_inf = total / energies.max()
    return EnergyFactors(gamma_2=float(gamma_2), gamma_inf=float(gamma_inf))


def blockdiag_bound(p, factors):
    """Total measurements TM for a block-diagonal operator (energy-dependent).

    W = min(c2^2 * delta^2 * Gamma_2, c2 * delta * Gamma_inf) replaces the
    c1*delta denominator and the whole bound is scaled by T.
    """
    w = min(
        p.c2**2 * p.delta**2 * factors.gamma_2,
        p.c2 * p.delta * factors.gamma_inf,
    )
    if p.k <= math.floor(math.log2(p.N)):
        inner = (
            math.log(2.0)
            + p.k
            + math.log(p.N / (p.k + 1))
            + p.T * p.k * math.log(12.0 / p.delta)
            + p.t
        )
    else:
        inner = (
            math.log(2.0)
            + p.k * math.log(4.0)
            + math.log(p.c3 * p.N / p.k)
            + p.T * p.k * math.log(12.0 / p.delta)
            + p.t
        )
    return (2.0 * p.T / (p.c1 * w)) * inner


def rip_concentration_experiment(T, N, k, M, energy_profile, trials,
                                 seed=None, tree=None, operator="block",
                                 delta=0.3):
    """Empirical distribution of ||Ax||^2 - 1 on forest-sparse unit signals.

    Draws fresh operators (block-diagonal of per-channel Gaussians, or one
    dense TM x TN Gaussian) and supports per trial; each channel's energy
    follows `energy_profile` and the stacked signal is normalized to unit
    norm.  Returns a dict with mean/std of ||Ax||^2 and the fraction of
    trials with |  ||Ax||^2 - 1 | > delta.
    """
    if T * N > 4096:
        raise ValueError("experiment guarded to TN <= 4096")
    from .wavelet import WaveletBasis

    if tree is None:
        levels = min(3, int(math.log2(N)) - 1)
        tree = WaveletBasis(N, levels=levels).build_tree_layout()
    profile = np.asarray(energy_profile, dtype=float)
    profile = profile / np.linalg.norm(profile)  # unit stacked norm
    root = np.random.default_rng(seed)
    values = np.empty(trials)
    for i in range(trials):
        rng = np.random.default_rng(root.integers(2**63))
        support = sample_rooted_subtree(tree, k, rng)
        x = np.zeros((T, N))
        for t in range(T):
            if profile[t] == 0:
                continue
            v = rng.standard_normal(k)
            x[t, support.indices] = v * (profile[t] / np.linalg.norm(v))
        if operator == "block":
            op = BlockDiagonalOperator(
                [
                    make_dense_subgaussian(M, N, seed=rng.integers(2**63))
                    for _ in range(T)
                ]
            )
        elif operator == "dense":
            op = make_dense_subgaussian(T * M, T * N, seed=rng.integers(2**63))
        else:
            raise ValueError("operator must be 'block' or 'dense'")
        y = op.forward(x.ravel())
        values[i] = float(y @ y)
    return {
        "mean": float(values.mean()),
        "std": float(values.std()),
        "tail_fraction": float(np.mean(np.abs(values - 1.0) > delta)),
        "values": values,
    }
