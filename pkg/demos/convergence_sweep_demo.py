"""Sweep the catalog size and watch the approximation error shrink.

For each n the sweep solves the characteristic time, predicts per-content
hit probabilities, simulates the LRU cache, and reports the measured
gaps together with reference decay curves.  This is a small-budget
version of the full validation run; see tests/test_acceptance.py for the
calibrated one.
"""

from pathlib import Path

from ttlapprox import Exponential, SweepSpec, ZipfLaw, convergence_sweep, emit

spec = SweepSpec(n_values=(50, 100, 200, 400), beta=0.3, law=ZipfLaw(0.8),
                 family_assignment=Exponential(1.0), events_per_point=200_000,
                 replications=4, seed=7, cutoff_requests=500.0)
rows = convergence_sweep(spec)

print("    n    C       T_n     max gap (stderr)      agg gap (stderr)   limit ref")
for r in rows:
    print(f"{r.n:5d} {r.C_n:4d}  {r.T_n:8.4f}   {r.gap_max:.5f} ({r.stderr_max:.5f})   "
          f"{r.gap_aggregate:.6f} ({r.stderr_agg:.6f})   {r.fagin_limit:.4f}")
print("\nreference curves: sqrt(log C / C) =",
      ", ".join(f"{r.curve_sqrt:.3f}" for r in rows))

out = Path(__file__).with_suffix("").name + ".csv"
emit(rows, out, "csv")
print(f"rows written to {out}")
