"""Show the parent-child tree over wavelet coefficients of a 1-D signal.

Transforms a small piecewise-constant signal, prints the coefficient
magnitudes level by level, and marks which nodes form the rooted connected
subtree that carries the signal's energy.

Run:  python3 demos/wavelet_tree.py
"""

import numpy as np

from forestcs import WaveletBasis


def main():
    n, levels = 32, 3
    x = np.zeros(n)
    x[10:18] = 1.0
    basis = WaveletBasis(n, levels=levels)
    tree = basis.build_tree_layout()
    theta = basis.dwt(x)

    print("signal: step on samples 10..17 of", n)
    print("approximation coefficients:", np.round(theta[tree.approx], 3))
    peak = np.max(np.abs(theta))
    for idx in range(len(theta)):
        if idx in set(tree.approx.tolist()):
            continue
        mark = "*" if abs(theta[idx]) > 1e-3 * peak else " "
        parent = tree.parent[idx]
        kids = tree.children[idx].tolist()
        print(f"  node {idx:2d} {mark} |theta|={abs(theta[idx]):6.3f} "
              f"parent={parent:3d} children={kids}")
    print("\nnodes marked * carry energy; note they form connected")
    print("parent-child chains from the roots down (tree sparsity).")


if __name__ == "__main__":
    main()
