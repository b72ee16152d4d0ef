#!/usr/bin/env python3
"""Regenerate the golden trace report used by the acceptance suite.

The fixture is the rank-32 sign construction on N = 256 with seed 1, traced
at the threshold gamma_threshold(256, 32, 0.25) with C = C1 = 1.  The output
is canonical JSON, so reruns on one platform must be byte-identical.
"""

from pathlib import Path

from irlm import make_random_sign
from irlm.bounds import gamma_threshold
from irlm.prooftrace import TraceConfig, trace

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden" / "trace_N256_n32_seed1.json"


def build_report() -> str:
    matrix = make_random_sign(256, 32, 1)
    cfg = TraceConfig(gamma=gamma_threshold(256, 32, 0.25))
    return trace(matrix, cfg).to_json()


def main() -> None:
    text = build_report()
    GOLDEN.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN.write_text(text)
    print(f"wrote {GOLDEN} ({len(text)} bytes)")


if __name__ == "__main__":
    main()
