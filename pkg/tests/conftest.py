import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def adder4():
    from axoprune.opgen import OperatorSpec, generate
    spec = OperatorSpec.uadd(4)
    return spec, generate(spec)


@pytest.fixture(scope="session")
def adder8():
    from axoprune.opgen import OperatorSpec, generate
    spec = OperatorSpec.uadd(8)
    return spec, generate(spec)


@pytest.fixture(scope="session")
def mul4():
    from axoprune.opgen import OperatorSpec, generate
    spec = OperatorSpec.smul(4, 4)
    return spec, generate(spec)


@pytest.fixture(scope="session")
def mul8():
    from axoprune.opgen import OperatorSpec, generate
    spec = OperatorSpec.smul(8, 8)
    return spec, generate(spec)
