"""JSON round-trips for instances and solutions.

Complex arrays are stored as nested ``[re, im]`` pairs so files stay plain
JSON. An instance file holds ``params``, ``channel`` (``h``, ``g``, ``seed``)
and optionally the ``channel_config`` it was drawn with.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .channel import ChannelConfig
from .model import BeamformingSolution, ChannelRealization, SolutionStatus, SystemParams

__all__ = [
    "complex_to_json",
    "complex_from_json",
    "instance_to_dict",
    "instance_from_dict",
    "solution_to_dict",
    "solution_from_dict",
    "save_json",
    "load_json",
]


def complex_to_json(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("complex data must end in [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def instance_to_dict(params: SystemParams, chan: ChannelRealization,
                     config: ChannelConfig | None = None) -> dict:
    d = {
        "params": params.to_dict(),
        "channel": {"h": complex_to_json(chan.h), "g": [complex_to_json(gk) for gk in chan.g],
                    "seed": chan.seed},
    }
    if config is not None:
        d["channel_config"] = config.to_dict()
    return d


def instance_from_dict(d: dict):
    """Returns ``(params, chan)``."""
    params = SystemParams.from_dict(d["params"])
    ch = d["channel"]
    chan = ChannelRealization(complex_from_json(ch["h"]),
                              tuple(complex_from_json(gk) for gk in ch["g"]), ch.get("seed"))
    chan.check(params)
    return params, chan


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def solution_to_dict(sol: BeamformingSolution) -> dict:
    info = {k: v for k, v in sol.info.items() if isinstance(v, (str, int, float, bool, type(None), dict))}
    return {
        "scheme": sol.scheme,
        "status": sol.status.value,
        "W": complex_to_json(sol.W),
        "V": complex_to_json(sol.V),
        "rho": _num(sol.rho),
        "objective_w": _num(sol.objective),
        "rank_ratio": _num(sol.rank_ratio),
        "w": None if sol.w_extracted is None else complex_to_json(sol.w_extracted),
        "info": info,
    }


def solution_from_dict(d: dict) -> BeamformingSolution:
    w = d.get("w")
    rr = d.get("rank_ratio")
    rho = d.get("rho")
    return BeamformingSolution(
        W=complex_from_json(d["W"]), V=complex_from_json(d["V"]),
        rho=math.nan if rho is None else float(rho),
        status=SolutionStatus(d.get("status", "Optimal")),
        w_extracted=None if w is None else complex_from_json(w),
        rank_ratio=math.nan if rr is None else float(rr),
        scheme=d.get("scheme", ""), info=dict(d.get("info", {})),
    )


def save_json(obj: dict, path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(obj, indent=1))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def load_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
