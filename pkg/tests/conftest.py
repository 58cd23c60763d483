import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

from dci_lab.dataset import ColumnSpec, Dataset


def make_classification(features, labels, class_names=None):
    """Dataset from raw arrays with auto-named numeric columns."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if class_names is None:
        class_names = tuple(f"c{i}" for i in range(int(labels.max()) + 1))
    specs = tuple(ColumnSpec(f"f{i}", "numeric") for i in range(features.shape[1]))
    specs += (ColumnSpec("label", "label_class"),)
    return Dataset(
        features=features, labels=labels, column_specs=specs, class_names=class_names
    )


def make_regression(features, targets):
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    specs = tuple(ColumnSpec(f"f{i}", "numeric") for i in range(features.shape[1]))
    specs += (ColumnSpec("target", "label_numeric"),)
    return Dataset(features=features, labels=targets, column_specs=specs)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
