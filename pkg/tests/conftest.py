import numpy as np
import pytest

from kddids.schema import FeatureSchema, KddRecord

SCHEMA = FeatureSchema.kdd99()
NAME_TO_POS = {f.name: i for i, f in enumerate(SCHEMA.features)}


def make_record(label="normal", **overrides) -> KddRecord:
    """A valid record: zeros and tcp/http/SF defaults, overridable by name."""
    values = [0.0] * 41
    values[1] = "tcp"
    values[2] = "http"
    values[3] = "SF"
    for name, v in overrides.items():
        values[NAME_TO_POS[name]] = v
    return KddRecord(tuple(values), label)


def make_line(label="normal", **overrides) -> str:
    from kddids.ingest import serialize_record

    return serialize_record(make_record(label, **overrides))


@pytest.fixture
def schema():
    return SCHEMA


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
