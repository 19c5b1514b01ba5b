import random
from pathlib import Path

import numpy as np
import pytest

from putlab.dataset import AttributeMeta, Dataset, parse_arff

DATA_DIR = Path(__file__).parent / "data"

WEATHER_ARFF = """\
% tiny play/no-play dataset
@relation weather

@attribute outlook {sunny,overcast,rainy}
@attribute temperature numeric
@attribute humidity numeric
@attribute windy {false,true}
@attribute play {no,yes}

@data
sunny,85,85,false,no
sunny,80,90,true,no
overcast,83,86,false,yes
rainy,70,96,false,yes
rainy,68,80,false,yes
rainy,65,70,true,no
overcast,64,65,true,yes
sunny,72,95,false,no
sunny,69,70,false,yes
rainy,75,80,false,yes
sunny,75,70,true,yes
overcast,72,90,true,yes
overcast,81,75,false,yes
rainy,71,91,true,no
"""


@pytest.fixture
def weather() -> Dataset:
    return parse_arff(WEATHER_ARFF)


def build_dataset(
    n_rows: int,
    nominal: int = 2,
    numeric: int = 2,
    n_classes: int = 2,
    seed: int = 7,
    informative: bool = True,
    class_labels=None,
) -> Dataset:
    """Synthetic dataset where (when informative) attribute 1 carries the
    class signal and the rest are noise."""
    rng = np.random.default_rng(seed)
    labels = tuple(class_labels or (f"c{i}" for i in range(n_classes)))
    class_codes = rng.integers(0, n_classes, size=n_rows).astype(np.int32)
    attributes = []
    columns = []
    serial = 0
    for j in range(nominal):
        serial += 1
        n_labels = 3
        codes = rng.integers(0, n_labels, size=n_rows).astype(np.int32)
        if informative and serial == 1:
            flip = rng.random(n_rows) < 0.85
            codes[flip] = class_codes[flip] % n_labels
        attributes.append(
            AttributeMeta(f"nom{j}", serial, tuple(f"v{t}" for t in range(n_labels)))
        )
        columns.append(codes)
    for j in range(numeric):
        serial += 1
        values = rng.normal(0.0, 1.0, size=n_rows)
        if informative and serial == nominal + 1:
            values = values + 3.0 * class_codes
        attributes.append(AttributeMeta(f"num{j}", serial, None))
        columns.append(values)
    class_meta = AttributeMeta("class", 0, labels)
    return Dataset(attributes, class_meta, columns, class_codes, source_name="synthetic")


@pytest.fixture
def synthetic():
    return build_dataset(240, nominal=2, numeric=2)


def dataset_to_arff_file(ds: Dataset, path: Path) -> Path:
    from putlab.dataset import to_arff

    path.write_text(to_arff(ds))
    return path


def require_adult_files():
    train = DATA_DIR / "adult.data"
    test = DATA_DIR / "adult.test"
    if not train.exists() or not test.exists():
        pytest.skip(
            "UCI adult files not present; place adult.data and adult.test "
            f"under {DATA_DIR} (see README: Reference datasets)"
        )
    return train, test


def require_creditcard_file():
    cc = DATA_DIR / "creditcard.csv"
    if not cc.exists():
        pytest.skip(
            f"credit-card fraud CSV not present; place creditcard.csv under {DATA_DIR}"
        )
    return cc


def stable_rng(seed: int = 1234) -> random.Random:
    return random.Random(seed)
