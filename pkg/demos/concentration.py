"""Energy-spread effect on block-diagonal measurement concentration.

Empirically compares the spread of ||Ax||^2 / ||x||^2 when one channel
carries all the energy (one-hot profile) vs equal energy per channel.
Block-diagonal operators concentrate worse for one-hot profiles because
only one block's rows see the signal; dense operators do not care.

Run:  python3 demos/concentration.py
"""

from forestcs import rip_concentration_experiment


def main():
    for operator in ("block", "dense"):
        print(f"{operator} operator, T=4, N=64, k=4, M=16, 400 trials:")
        for name, profile in (("equal ", [1.0, 1.0, 1.0, 1.0]),
                              ("onehot", [1.0, 0.0, 0.0, 0.0])):
            stats = rip_concentration_experiment(
                4, 64, 4, 16, profile, trials=400, seed=0,
                operator=operator)
            print(f"  {name}: mean={stats['mean']:.3f} "
                  f"std={stats['std']:.3f} "
                  f"tail(>30% off)={stats['tail_fraction']:.3f}")
    print("\none-hot widens the block-diagonal spread; dense is unchanged.")


if __name__ == "__main__":
    main()
