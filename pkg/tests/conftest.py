import numpy as np
import pytest

from fraudtriage.datapool import Dataset


@pytest.fixture
def tiny_dataset() -> Dataset:
    """Six rows, two hidden positives, features equal to the row index."""
    features = np.arange(6, dtype=np.float64).reshape(-1, 1)
    labels = np.array([0, 1, 0, 0, 1, 0])
    return Dataset(name="tiny", features=features, labels=labels)


@pytest.fixture
def write_csv():
    def _write(path, header, rows):
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row) + "\n")
        return path
    return _write
