import numpy as np
import pytest

from motionauth.data import generate_synthetic_dataset
from motionauth.nn import ModelConfig

TINY = ModelConfig(d_model=8, n_head=2, d_q=4, d_k=4, d_v=4, d_hidden=16, n_encoder_layers=1, n_decoder_layers=1)
SMALL = ModelConfig(d_model=64, n_head=4, d_q=16, d_k=16, d_v=16, d_hidden=128,
                    n_encoder_layers=1, n_decoder_layers=1)
SMALL_TF = dict(d_model=64, n_head=4, d_k=16, d_v=16, d_hidden=128)


@pytest.fixture(scope="session")
def corpus():
    """4 synthetic users, 2 days x 10 sessions each."""
    return generate_synthetic_dataset(4, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# criterion number -> (status, detail); filled by test_acceptance, printed after the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {detail}")
