"""Large-system limit of the aggregate hit probability.

When the cache holds a fixed fraction beta0 of the catalog and the
popularity profile approaches a density f on (0, 1], the aggregate hit
probability converges to integral f(x) psi(nu0 f(x)) dx, where nu0 solves
integral psihat(nu0 f(x)) dx = beta0.  This script solves the limit for a
Zipf-like density and watches the finite-n characteristic-time
approximation approach it.
"""

from ttlapprox import (AsymptoticModel, Exponential, ModelClass, PowerLawDensity,
                       beta_fn, characteristic_time, fagin_catalog, hit_limit,
                       solve_nu0, ttl_hit)

# f(x) = 0.2 x^{-0.8} (unit integral), Poisson streams, cache fraction 0.3
model = AsymptoticModel(
    (ModelClass(1.0, PowerLawDensity(0.2, 0.8), Exponential(1.0)),), beta0=0.3)

res = solve_nu0(model)
limit = hit_limit(model, res.nu0)
print(f"scaled timer nu0 = {res.nu0:.8f} (residual {res.residual:.1e})")
print(f"beta(nu0) = {beta_fn(model, res.nu0):.8f} (= beta0 = 0.3)")
print(f"limiting aggregate hit probability = {limit:.8f}")
print()
print("finite-n approach (characteristic-time approximation):")
print("      n      T_n      aggregate    gap to limit")
for n in (100, 1000, 10000):
    catalog = fagin_catalog(model, n, total_rate=float(n))
    C = round(0.3 * n)
    T = characteristic_time(catalog, C).t
    agg = ttl_hit(catalog, T).aggregate
    print(f"{n:7d}  {T:8.5f}   {agg:.6f}     {abs(agg - limit):.2e}")
