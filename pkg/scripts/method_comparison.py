"""Rank the estimators by CF_B error over a seed ensemble.

Usage:
  python scripts/method_comparison.py [n_seeds] [duration_minutes]

Each seed draws synthetic observations from a known truth, fits every method
and reports which one has the lowest AWRE. Exit code 1 when the new
likelihood does not win the majority of seeds.
"""

from __future__ import annotations

import sys
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


def main() -> int:
    from stochcap.error_handler import EstimationError
    from stochcap.models import WeibullParams
    from stochcap.simulate import DemandConfig, synth_observations
    from stochcap.validate import compare_methods

    n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    duration = int(sys.argv[2]) if len(sys.argv) > 2 else 8_250

    truth = WeibullParams(scale=146.42, shape=6.75, window_minutes=3, eval_step_minutes=1)
    demand = DemandConfig(mean=68, reversion=0.05, volatility=3, lower=46, upper=115)

    winners: Counter[str] = Counter()
    failed = 0
    for seed in range(100, 100 + n_seeds):
        obs, _ = synth_observations(truth, demand, duration, seed)
        try:
            comparison = compare_methods(obs)
        except EstimationError as e:
            print(f"seed {seed}: {e}")
            failed += 1
            continue
        awre = {name: result.report.awre for name, result in comparison.methods.items()}
        best = min(awre, key=awre.get)
        winners[best] += 1
        print(f"seed {seed}: " + " ".join(f"{name}={value:.2f}%" for name, value in awre.items()) + f" -> {best}")

    print()
    for name, count in winners.most_common():
        print(f"{name}: lowest AWRE in {count}/{n_seeds} seeds")
    if failed:
        print(f"{failed} seeds failed to fit")
    return 0 if winners["mle-new"] * 2 > n_seeds else 1


if __name__ == "__main__":
    raise SystemExit(main())
