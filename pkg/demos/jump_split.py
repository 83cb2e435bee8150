"""The jump unraveling's two-point distribution against its closed form.

With click rates tied to the Born weight, the ensemble at any time is just
two points: the no-click survivors, drifted together toward eigenstate 0,
and the clicked trajectories resting at eigenstate 1.  Survival weights,
the survivors' position, and the survivors' coherence all have elementary
closed forms that the simulation must hit.
"""

import argparse

import math

from qtraj.ensemble import EnsembleConfig, jump_ensemble


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--x", type=float, default=0.6)
    parser.add_argument("--n-traj", type=int, default=50_000)
    parser.add_argument("--rate-multiplier", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    taus = (0.25, 0.5, 1.0, 2.0, 4.0)
    cfg = EnsembleConfig(
        model="jump", n_traj=args.n_traj, tau_snapshots=taus,
        rate_multiplier=args.rate_multiplier, tau_budget=max(taus), seed=args.seed,
    )
    result = jump_ensemble(cfg, args.x)

    print(
        f"x = {args.x}, rate multiplier = {args.rate_multiplier}, "
        f"{args.n_traj} trajectories\n"
    )
    print(f"{'tau':>5} {'survivors at':>14} {'closed form':>12} "
          f"{'surviving wt':>13} {'closed form':>12} {'coherence':>10} {'e^-tau':>8}")
    for row in result.rows:
        print(
            f"{row.tau:>5g} {row.moving_pos_emp:>14.6f} {row.moving_pos_oracle:>12.6f} "
            f"{row.moving_wt_emp:>13.5f} {row.moving_wt_oracle:>12.5f} "
            f"{row.coherence_emp:>10.5f} {math.exp(-row.tau):>8.5f}"
        )

    print(
        "\nThe survivor position follows the deterministic drift exactly;"
        "\nweights fluctuate within binomial error; at the Born click rate the"
        "\nsurvivor coherence factor equals e^{-tau} (mean coherence decays"
        "\ntwice as fast as in the diffusive unraveling)."
    )


if __name__ == "__main__":
    main()
