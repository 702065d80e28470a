"""
Checking the SDP against brute force
====================================

With two antennas and one idle receiver the beamformer and the noise
covariance can be taken rank one, so the whole problem is four angles, a
split ratio and two powers. A grid search over the angles, with the powers
from an exact two-variable LP and rho profiled out, gives an upper bound
that should sit just above the SDP optimum. A golden-section search over
rho with fixed-rho SDPs gives a second, independent route to the same value.
"""

import time

from secure_swipt import SystemParams, draw_channel, solve_relaxed
from secure_swipt.channel import ChannelConfig, trial_seed
from secure_swipt.oracle import brute_force, golden_section_rho

params = SystemParams.paper_defaults(n_t=2, k_receivers=2)

found = 0
t = 0
while found < 3:
    chan = draw_channel(params, ChannelConfig(), trial_seed(0, t))
    t += 1
    sol, _ = solve_relaxed(params, chan)
    if not sol.has_point:
        continue
    found += 1
    t0 = time.perf_counter()
    grid = brute_force(params, chan)
    t_grid = time.perf_counter() - t0
    gs, rho_gs, n_gs = golden_section_rho(params, chan)
    print("draw %d" % (t - 1))
    print("  SDP            %.9f W  rho %.5f" % (sol.objective, sol.rho))
    print("  grid           %.9f W  rho %.5f  (+%.3f%%, %d points, %.1f s)"
          % (grid.objective, grid.rho, 100 * (grid.objective / sol.objective - 1),
             grid.evaluations, t_grid))
    print("  golden section %.9f W  rho %.5f  (%d fixed-rho solves)" % (gs, rho_gs, n_gs))
