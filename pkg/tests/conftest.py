import numpy as np
import pytest

from cavitas import derive_all, load_spec, paper_baseline_path


@pytest.fixture(scope="session")
def baseline():
    return load_spec(paper_baseline_path())


@pytest.fixture(scope="session")
def derived(baseline):
    return derive_all(baseline)


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)
