"""
Reading the dual certificate
============================

The interior-point solver returns multipliers alongside the primal point.
Here they are used to rebuild the stationarity matrices, confirm the
duality gap, test the beta >= delta rank-one condition and recompute the
optimal split ratio from the two multipliers it depends on.
"""

import numpy as np

from secure_swipt import SystemParams, draw_channel, solve_relaxed
from secure_swipt.certify import (active_set, check_proposition1, kkt_residuals, rank_bound_check,
                                  rho_star_formula)
from secure_swipt.channel import ChannelConfig

params = SystemParams.paper_defaults()
chan = draw_channel(params, ChannelConfig(), 3)
sol, cert = solve_relaxed(params, chan)
print("objective %.9f W, rho %.6f" % (sol.objective, sol.rho))

# Multipliers scale like 1 / channel gain; multiplying by the gain makes them unitless
nm = cert.normalized()
print("\nlambda |h|^2 = %.6f   mu |h|^2 = %.6f" % (nm["lambda"], nm["mu"]))
print("beta  |g|^2  =", np.round(nm["beta"], 6))
print("delta |g|^2  =", np.round(nm["delta"], 6))
print("active:", {k: v for k, v in active_set(cert).items()})

res = kkt_residuals(params, chan, sol, cert)
print("\nKKT residuals")
for key in ("stationarity_W", "stationarity_V", "complementarity", "dual_feasibility", "gap"):
    print("  %-17s %.2e" % (key, res[key]))
print("  dual function   %.9f W" % res["dual_objective"])

# beta_k >= delta_k for every k is sufficient (not necessary) for a rank-one W
p1 = check_proposition1(cert, sol)
print("\ncondition holds: %s, rank one: %s, consistent: %s"
      % (p1["condition_holds"], p1["rank_one"], p1["consistent"]))
rb = rank_bound_check(cert, params, W=sol.W)
print("rank(Y) = %d of %d, min eig of A = %.4f" % (rb["Y_rank"], params.n_t, rb["A_min_eig"]))

# With both the SINR and the harvesting constraint binding, rho follows from lambda and mu
rs = rho_star_formula(cert.lambda_, cert.mu, params)
print("\nrho from the solver %.8f, from the multipliers %.8f" % (sol.rho, rs))
