import functools

import numpy as np
import pytest

from secure_swipt.channel import ChannelConfig, draw_channel, trial_seed
from secure_swipt.model import SystemParams
from secure_swipt.schemes import solve_relaxed


@functools.lru_cache(maxsize=None)
def feasible_instances(count, n_t=6, k=4, gamma_db=9.0, base=0, max_draws=2000):
    """First ``count`` seeded draws whose relaxed problem is solvable."""
    params = SystemParams.paper_defaults(n_t=n_t, k_receivers=k, gamma_req_db=gamma_db)
    out = []
    for t in range(max_draws):
        chan = draw_channel(params, ChannelConfig(), trial_seed(base, t))
        sol, _ = solve_relaxed(params, chan)
        if sol.has_point:
            out.append(chan)
            if len(out) == count:
                break
    return params, tuple(out)


@pytest.fixture(scope="session")
def defaults():
    return SystemParams.paper_defaults()


@pytest.fixture(scope="session")
def feasible_set():
    return feasible_instances(10)


@pytest.fixture(scope="session")
def instance(feasible_set):
    params, chans = feasible_set
    return params, chans[0]


def toy_params(n_t=2, k=2, **kw):
    base = dict(n_t=n_t, k_receivers=k, sigma_s2=1.0, sigma_ant2=1.0, eta=0.5, gamma_req=1.0,
                gamma_tol=0.5, p_min=0.0, p_min_k=0.0, p_max=100.0, p_pg=1000.0, p_c=1.0,
                epsilon=1.0)
    base.update(kw)
    return SystemParams(**base)


def random_hermitian(rng, n, psd=False):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T if psd else 0.5 * (A + A.conj().T)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
