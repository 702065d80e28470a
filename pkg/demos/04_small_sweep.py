"""
A small SINR sweep
==================

A reduced version of the transmit-power-versus-SINR experiment: 30 channel
draws per point instead of 100. Averages are shown two ways. The
feasible-only mean changes population from point to point as hard channels
drop out. The common-set mean uses only draws that every scheme solves at
every point.
"""

import math

from secure_swipt.harness import ExperimentConfig, run_sweep

cfg = ExperimentConfig("gamma_req_db", (0.0, 3.0, 6.0, 9.0, 12.0), trials=30, base_seed=0)
records, table = run_sweep(cfg)

print("%6s %-10s %9s %14s %14s" % ("SINR", "scheme", "feasible", "mean dBm", "common dBm"))
for row in table:
    fmt = lambda v: "-" if v is None else "%.3f" % v
    print("%6g %-10s %5d/%-3d %14s %14s" % (row["value"], row["scheme"], row["feasible"],
                                           row["trials"], fmt(row["mean_tx_power_dbm"]),
                                           fmt(row["common_tx_power_dbm"])))

n_common = table[0]["common_trials"]
print("\n%d of %d draws are feasible for every scheme at every SINR" % (n_common, cfg.trials))

# secrecy rate sits on the floor whenever the SINR constraints bind
for row in table:
    if row["scheme"] == "scheme2" and row["mean_secrecy_capacity_bps_hz"] is not None:
        floor = math.log2(1 + 10 ** (row["value"] / 10)) - math.log2(1.1)
        print("SINR %4g dB: mean secrecy %.4f, floor %.4f"
              % (row["value"], row["mean_secrecy_capacity_bps_hz"], floor))
