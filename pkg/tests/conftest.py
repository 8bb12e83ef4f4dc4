import pathlib

import pytest

from revdbg.syntax import parse_program

PROGRAMS = pathlib.Path(__file__).parent / "programs"
GOLDEN = pathlib.Path(__file__).parent / "golden"


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        outcome = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"\nACCEPTANCE {name}: {outcome} ({report.duration:.2f}s)")


def program_source(name):
    return (PROGRAMS / f"{name}.erl").read_text()


def load_program(name):
    return parse_program(program_source(name))


@pytest.fixture
def stock():
    return load_program("stock")


@pytest.fixture
def fact():
    return load_program("fact")
