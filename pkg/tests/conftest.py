"""Shared synthetic fixtures.

Session scope where generation is not free; every fixture is a pure
function of fixed seeds, so tests never interact through them.
"""

import numpy as np
import pytest

from pricelab.market_data import OptionKind
from pricelab.synth import synth_chain


@pytest.fixture(scope="session")
def bs_day():
    """One noiseless constant-vol day, both kinds, 13 strikes x 4 expiries."""
    return synth_chain("bs", dividend=0.013)[0]


@pytest.fixture(scope="session")
def bs_days():
    """Twenty noiseless constant-vol trading days."""
    return synth_chain("bs", n_days=20, dividend=0.01)


@pytest.fixture(scope="session")
def bs_put_day(bs_day):
    return bs_day.of_kind(OptionKind.PUT)


@pytest.fixture(scope="session")
def vg_day():
    """One noiseless day priced by the Gamma-subordinated model, with every
    put mid comfortably above the trim floor."""
    return synth_chain(
        "vg",
        theta=0.0,
        sigma=0.3,
        alpha=3.0,
        strikes=list(np.linspace(90.0, 120.0, 10)),
        maturities_days=(91, 182, 273, 365),
    )[0]
