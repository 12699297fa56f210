"""Print the work-zone capacity table for the published parameter sets.

Usage:
  python scripts/capacity_table.py

Without speed harmonisation W(146.42, 6.75), with it W(158.78, 6.86),
both fitted on 3-minute windows evaluated every minute.
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


def main() -> int:
    from stochcap.file_formats import comparison_frame, float_format
    from stochcap.models import WeibullParams
    from stochcap.transform import compare_scenarios

    without = WeibullParams(scale=146.42, shape=6.75, window_minutes=3, eval_step_minutes=1)
    with_vsl = WeibullParams(scale=158.78, shape=6.86, window_minutes=3, eval_step_minutes=1)

    comparison = compare_scenarios(without, with_vsl)
    print(comparison_frame(comparison).to_string(index=False, float_format=lambda v: float_format() % v))
    print()
    print(f"Median capacity: {comparison.median_a:.1f} -> {comparison.median_b:.1f} PCE/3min")
    print(
        f"Average increase: {comparison.average_relative_increase_pct:.1f}% "
        f"({comparison.average_absolute_increase_per_hour:.0f} PCE/h)"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
