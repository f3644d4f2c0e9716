"""Print the theoretical measurement-count bounds for each sparsity model.

Evaluates the closed-form sufficient measurement counts with unit constants
over a small grid of problem sizes, showing how the structured models need
fewer measurements as the channel count grows.

Run:  python3 demos/bounds_table.py
"""

from forestcs import BoundParams, measurement_bound

MODELS = ("standard", "joint", "tree", "forest")


def main():
    print(f"{'N':>6} {'k':>4} {'T':>3} | " +
          " ".join(f"{m:>10}" for m in MODELS))
    for n in (256, 1024, 4096):
        for k in (8, 32):
            for t in (2, 4, 8):
                p = BoundParams(N=n, k=k, T=t)
                vals = [measurement_bound(m, p) for m in MODELS]
                print(f"{n:>6} {k:>4} {t:>3} | " +
                      " ".join(f"{v:10.0f}" for v in vals))
    print("\nforest <= joint and forest <= tree <= standard throughout;")
    print("joint vs tree depends on whether k is larger than T.")


if __name__ == "__main__":
    main()
