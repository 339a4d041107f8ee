import pytest

from chaincase import Ledger
from chaincase.bpmn.fixture import DEMO_XML
from chaincase.service import Runtime


@pytest.fixture
def ledger():
    return Ledger()


@pytest.fixture
def runtime():
    return Runtime(ledger=Ledger())


@pytest.fixture
def demo(runtime):
    """Runtime with the two-level demo model registered."""
    record = runtime.register_model(DEMO_XML)
    return runtime, record


@pytest.fixture
def demo_case(demo):
    runtime, record = demo
    receipt = runtime.create_case(record.root_flow, runtime.deployer)
    assert receipt.ok
    return runtime, record, receipt.value
