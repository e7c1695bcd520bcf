"""One concrete scenario per symmetry-table row, for tests and the CLI."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from .model import (
    Profile,
    Scenario,
    constant,
    exp_t,
    exp_u,
    exponential,
    inv_t,
    monomial,
    power,
    power_t,
    tabulated,
)

_S = np.linspace(-4.0, 4.0, 33)


def _generic_A():
    # 1 + u^2 is neither a power nor an exponential, even after shifts and scalings
    return tabulated(_S, 1.0 + _S ** 2)


def _generic_G():
    xs = np.linspace(0.0, 4.0, 17)
    return tabulated(xs, 1.0 + xs + 0.5 * np.sin(xs))


def _generic_W():
    ts = np.linspace(0.0, 4.0, 17)
    return tabulated(ts, 1.0 + ts ** 2 + 0.3 * np.cos(3 * ts))


def row_fixtures() -> dict:
    """``{(table, row): Scenario}`` with non-canonical constants where the row allows them.

    Each carries the positive initial profile ``1 + 0.3 cos(pi s)`` so it can be solved directly.
    """
    A2 = monomial(2.0)
    ic = Profile("cosine", 1.0, 0.3, 1)
    rows = {
        (1, 1): Scenario(power(2.0, 3.0), _generic_A(), inv_t().rescaled(2.0), (0.5, 1.5), (1.0, 2.0)),
        (1, 2): Scenario(exponential(1.0).rescaled(3.0, 2.0), _generic_A(), inv_t(), (0.0, 1.0), (1.0, 2.0)),
        (1, 3): Scenario(power(0.5, 2.0), _generic_A(), _generic_W(), (0.5, 1.5), (0.0, 1.0)),
        (1, 4): Scenario(constant(3.0), _generic_A(), power_t(2.0), (0.0, 1.0), (0.5, 1.5)),
        (1, 5): Scenario(constant(2.0), _generic_A(), inv_t().rescaled(0.5), (0.0, 1.0), (1.0, 2.0)),
        (2, 1): Scenario(_generic_G(), exp_u(), power_t(2.0), (0.0, 1.0), (0.5, 1.5)),
        (2, 3): Scenario(constant(2.0), exp_u().rescaled(3.0), power_t(2.0), (0.0, 1.0), (0.5, 1.5)),
        (3, 1): Scenario(_generic_G(), A2, power_t(-1.5), (0.0, 1.0), (1.0, 2.0)),
        (3, 2): Scenario(power(2.0, 3.0), A2, power_t(2.0), (0.5, 1.5), (0.5, 1.5)),
        (3, 3): Scenario(power(1.0, 3.0), monomial(1.0), exp_t(1.0), (0.5, 1.5), (0.0, 1.0)),
        (3, 4): Scenario(exponential(1.0), A2, power_t(2.0), (0.0, 1.0), (0.5, 1.5)),
        (3, 5): Scenario(exponential(1.0), A2, exp_t(2.0), (0.0, 1.0), (0.0, 1.0)),
        (3, 6): Scenario(power(1.0, 2.0), A2, power_t(-1.5), (0.5, 1.5), (1.0, 2.0)),
        (3, 7): Scenario(constant(3.0), A2, power_t(2.0), (0.0, 1.0), (0.5, 1.5)),
        (3, 8): Scenario(constant(3.0), A2, exp_t(2.0), (0.0, 1.0), (0.0, 1.0)),
    }
    return {k: replace(sc, ic=ic) for k, sc in rows.items()}
