#!/usr/bin/env python3
"""Experiment driver: sweep the sign construction over (N, n, seed) grids and
emit a CSV comparing measured densities with the closed-form bounds.

Usage: python scripts/theorem_sweep.py [out.csv]

The default grid covers the logarithmic-rank regime (n a small multiple of
ln N), where a positive fraction of entries must stay above c / sqrt(n).
"""

import sys
from pathlib import Path

from irlm.cli import SweepSpec, sweep_to_csv


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("theorem_sweep.csv")
    spec = SweepSpec.from_json(
        {
            "N_values": [128, 256, 512],
            "n_rule": {"log_multiples": [2, 4, 8]},
            "seeds": [1, 2, 3],
            "gamma_rule": {"rule": "theorem", "c": 0.25},
        }
    )
    out.write_bytes(sweep_to_csv(spec).encode())
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
