"""Small phase-transition study: success rate vs measurements per channel.

For each model, counts how often the support is recovered (mean per-channel
F1 >= 0.99) as the number of measurements per channel grows, and reports the
smallest count reaching a 90% success rate.

Run:  python3 demos/phase_transition.py   (takes a few minutes)
"""

import forestcs as fc
from forestcs.bench import run_phase


def main():
    rows, summary = run_phase(
        [16, 24, 32, 48, 64], n_channels=2, n=128, k=6, trials=8,
        config=fc.SolverConfig(lam=0.01, gamma=5.0, max_iters=400,
                               tol=1e-7),
        seed=0,
    )
    print("success rate by measurements per channel:")
    for model, info in summary.items():
        rates = " ".join(f"{r:.2f}" for r in info["raw"])
        print(f"  {model:9s} M={info['m_values']}  rates=[{rates}]  "
              f"M*={info['m_star']}")


if __name__ == "__main__":
    main()
