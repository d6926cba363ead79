import numpy as np
import pandas as pd
import pytest

from resbit.preprocessing import ColumnSchema

_acceptance = []


def make_mixed_dataset(n_rows=10_000, seed=0):
    """Two numeric columns and four categorical ones covering every scheme."""
    rng = np.random.default_rng(seed)
    frame = pd.DataFrame({
        "age": rng.normal(40, 12, n_rows).round(3),
        "income": rng.lognormal(10, 1, n_rows),
        "state": np.array([f"S{i:02d}" for i in range(50)])[rng.integers(0, 50, n_rows)],
        "merchant": np.array([f"m{i}" for i in range(700)])[rng.integers(0, 700, n_rows)],
        "zip3": np.array([str(100 + i) for i in range(13)])[rng.integers(0, 13, n_rows)],
        "card": rng.choice(["visa", "amex", "master"], n_rows, p=[0.6, 0.1, 0.3]),
    })
    schemas = [
        ColumnSchema.numerical("age"),
        ColumnSchema.categorical("state", "resbit"),
        ColumnSchema.numerical("income"),
        ColumnSchema.categorical("merchant", "resbit"),
        ColumnSchema.categorical("zip3", "binary"),
        ColumnSchema.categorical("card", "onehot"),
    ]
    return frame, schemas


@pytest.fixture(scope="session")
def mixed_dataset():
    return make_mixed_dataset()


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _acceptance:
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] {name} ({duration:.2f}s)")
