import datetime as dt

import pytest

from casecast import bundled_dataset_path, load_csv

TRAIN_START = dt.date(2020, 3, 24)
TRAIN_END = dt.date(2020, 4, 23)
TEST_START = dt.date(2020, 4, 24)


@pytest.fixture(scope="session")
def series():
    return load_csv(bundled_dataset_path())


@pytest.fixture(scope="session")
def test_actuals(series):
    i = (TEST_START - series.start).days
    return series.cases[i : i + 15].astype(float)
