"""Minimum-power secure beamforming with artificial noise and power splitting.

Modules
-------
model     parameters, channel containers, link metrics, feasibility checks
channel   seeded path-loss and Rician-fading draws
sdpcore   primal-dual interior-point solver for block SDPs
problems  SDP encodings of the power-minimization problems
schemes   relaxed, suboptimal and baseline resource allocation
certify   dual recovery and KKT / rank-one certificates
oracle    brute-force and golden-section reference solvers
harness   Monte Carlo sweeps and CSV output
"""
from .channel import ChannelConfig, draw_channel, trial_seed
from .model import (BeamformingSolution, ChannelRealization, SolutionStatus, SystemParams,
                    check_feasibility, secrecy_capacity, secrecy_floor, total_harvested_power,
                    watt_to_dbm)
from .schemes import (Provenance, extract_rank_one, run_scheme, solve_baseline, solve_relaxed,
                      solve_scheme2, solve_sub1)

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "draw_channel",
    "trial_seed",
    "BeamformingSolution",
    "ChannelRealization",
    "SolutionStatus",
    "SystemParams",
    "check_feasibility",
    "secrecy_capacity",
    "secrecy_floor",
    "watt_to_dbm",
    "total_harvested_power",
    "Provenance",
    "extract_rank_one",
    "run_scheme",
    "solve_baseline",
    "solve_relaxed",
    "solve_scheme2",
    "solve_sub1",
]
