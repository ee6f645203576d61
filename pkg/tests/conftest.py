import numpy as np
import pytest

from boa.data import EQ, AttributeSchema, Literal, Schema, build_index, table_from_rows
from boa.datasets import breast_cancer, tic_tac_toe
from boa.model import LikelihoodHyper
from boa.patterns import Pattern, enumerate_patterns


@pytest.fixture(scope="session")
def ttt_table():
    return tic_tac_toe()


@pytest.fixture(scope="session")
def ttt_index(ttt_table):
    return build_index(ttt_table)


@pytest.fixture(scope="session")
def bc_table():
    return breast_cancer()


@pytest.fixture
def toy_schema():
    return Schema(
        (
            AttributeSchema("color", "categorical", ("blue", "green", "red")),
            AttributeSchema("size", "ordinal", ("s", "m", "l")),
        ),
        label_column="y",
        positive_label="1",
    )


@pytest.fixture
def toy_table(toy_schema):
    rows = [
        ("blue", "s"), ("blue", "l"), ("green", "m"), ("red", "l"),
        ("red", None), (None, "m"), ("green", "s"), ("blue", "m"),
    ]
    labels = [True, True, False, True, False, False, False, True]
    return table_from_rows(toy_schema, rows, labels)


@pytest.fixture
def toy_index(toy_table):
    return build_index(toy_table)


def random_table(rng, schema, n):
    rows = []
    for _ in range(n):
        rows.append(tuple(None if rng.random() < 0.05 else a.levels[rng.integers(a.n_levels)]
                          for a in schema.attributes))
    labels = rng.random(n) < 0.5
    return table_from_rows(schema, rows, labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


STRONG = LikelihoodHyper(10, 1, 10, 1)
BB_BETA = (20.0, 20.0, 20.0)


def tiny_instance(seed, J=3, N=12, n_candidates=6):
    """Labels from a planted rule (a0 = 1 and a1 = 1) with one flipped record.

    Candidates include the planted pattern, so MAP sets are usually non-empty.
    """
    rng = np.random.default_rng(seed)
    schema = Schema(tuple(AttributeSchema(f"a{j}", "categorical", ("0", "1")) for j in range(J)))
    X = rng.integers(0, 2, size=(N, J))
    y = (X[:, 0] == 1) & (X[:, 1] == 1)
    y[rng.integers(N)] ^= True
    if y.all() or not y.any():
        y[0] = not y[0]
    rows = [tuple(str(v) for v in r) for r in X]
    index = build_index(table_from_rows(schema, rows, y.tolist()))
    universe = [l for l in index.literal_universe if l.test == EQ]
    planted = Pattern.of(Literal(0, EQ, 1), Literal(1, EQ, 1))
    others = [p for p in enumerate_patterns(universe, 2) if p != planted]
    pick = rng.choice(len(others), size=n_candidates - 1, replace=False)
    return index, [planted] + [others[i] for i in pick]


# one line per acceptance criterion, printed after the run
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE[number])
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
