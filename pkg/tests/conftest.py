import csv
import difflib
import math
from pathlib import Path

import numpy as np
import pytest

from fracwave.quadrature import QuadratureSpec
from fracwave.spectral import TorusGrid


@pytest.fixture
def fixtures_dir():
    """Return the path to the fixture directory."""
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def grid1d():
    return TorusGrid(1, 64, 4.0 * math.pi)


@pytest.fixture
def grid2d():
    return TorusGrid(2, 32, 4.0 * math.pi)


@pytest.fixture
def grid3d():
    return TorusGrid(3, 16, 4.0 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def quad():
    return QuadratureSpec()


def compare_csv(actual: Path, expected_text: str, rtol: float = 0.0) -> list[str]:
    """Compare a CSV file with expected CSV text.

    Numeric cells are compared with relative tolerance ``rtol``; a zero
    tolerance requires identical text.

    Returns:
        List of difference messages. Empty list if the files match.
    """
    actual_text = actual.read_text()
    if rtol == 0.0:
        if actual_text == expected_text:
            return []
        diff = difflib.unified_diff(
            expected_text.splitlines(keepends=True),
            actual_text.splitlines(keepends=True),
            fromfile="expected",
            tofile=f"actual/{actual.name}",
            lineterm="",
        )
        return ["".join(diff)]

    differences = []
    actual_rows = list(csv.reader(actual_text.splitlines()))
    expected_rows = list(csv.reader(expected_text.splitlines()))
    if len(actual_rows) != len(expected_rows):
        return [f"row count {len(actual_rows)} != {len(expected_rows)}"]
    if actual_rows[0] != expected_rows[0]:
        differences.append(f"header {actual_rows[0]} != {expected_rows[0]}")
    for number, (got, want) in enumerate(zip(actual_rows[1:], expected_rows[1:]), start=2):
        for column, (a, b) in enumerate(zip(got, want)):
            if not math.isclose(float(a), float(b), rel_tol=rtol, abs_tol=rtol):
                differences.append(f"line {number}, column {column}: {a} != {b}")
    return differences
