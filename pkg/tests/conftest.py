import pytest

from vibfuzz.harness.config import PipelineConfig
from vibfuzz.tools.fixture_gen import seven_state_table
from vibfuzz.tools.fuzzcore import build_output_universe
from vibfuzz.tools.intervalgebra import compile_rules


@pytest.fixture
def canonical_table():
    return seven_state_table()


@pytest.fixture
def canonical_rulebase(canonical_table):
    return compile_rules(canonical_table)


@pytest.fixture
def universe():
    return build_output_universe()


@pytest.fixture
def config():
    return PipelineConfig()
