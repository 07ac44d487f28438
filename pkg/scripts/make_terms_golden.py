"""Regenerate tests/data/terms_golden.csv from the quadrature oracle."""

from pathlib import Path

from heston_xpand import oracles

SEED = 7
N_CASES = 40

if __name__ == "__main__":
    out = Path(__file__).resolve().parents[1] / "tests" / "data" / "terms_golden.csv"
    oracles.write_golden(out, oracles.golden_rows(oracles.sample_term_params(N_CASES, SEED)))
    print(out)
