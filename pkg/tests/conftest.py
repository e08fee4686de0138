import pytest

from reference import BLASCHKE, BOOLE, DOUBLING


@pytest.fixture
def doubling():
    return DOUBLING


@pytest.fixture
def boole():
    return BOOLE


@pytest.fixture
def blaschke():
    return BLASCHKE
