import warnings

import numpy as np
import pytest

from twophoton_qd.model import CoherentPump, SystemParams
from twophoton_qd.operators import SpaceLayout
from twophoton_qd.phonons import PhononBathParams, get_kernels


@pytest.fixture(autouse=True)
def _quiet_regime_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="effective master equation used outside")
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def kernels5():
    return get_kernels(PhononBathParams(temperature=5.0))


@pytest.fixture
def small_params():
    return SystemParams(layout=SpaceLayout(2, 2))


@pytest.fixture
def small_coherent():
    return SystemParams(layout=SpaceLayout(2, 2), pump=CoherentPump(2.0, 2.0, 0.0), Delta_1=4.0)




def pytest_terminal_summary(terminalreporter):
    from helpers import acceptance_lines

    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in lines:
            terminalreporter.write_line(ln)
