import os
from pathlib import Path

import numpy as np
import pytest

from qorci import RngStream, parse_model

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def cauchy_fixture_path() -> Path:
    return DATA_DIR / "cauchy_n400.txt"


@pytest.fixture(scope="session")
def fig3_config_path() -> Path:
    return DATA_DIR / "fig3_scaled.json"


@pytest.fixture(scope="session")
def logistic_fixture_path(tmp_path_factory) -> Path:
    """5000 seeded draws from the logistic GLD member, as a data file."""
    model = parse_model("gld-fkml:l1=0,l2=1,l3=0,l4=0")
    values = model.sample(5000, RngStream(314159, 0))
    path = tmp_path_factory.mktemp("fixtures") / "logistic_n5000.txt"
    path.write_text("\n".join("%.17g" % v for v in values) + "\n")
    return path


@pytest.fixture(scope="session")
def workers() -> int:
    return min(2, os.cpu_count() or 1)
