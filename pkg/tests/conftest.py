from pathlib import Path
from typing import Mapping, Optional

import pytest

from src.map_format import bind_parameters, read_map_file
from src.polymap import PolynomialMap
from src.sampling import RationalSampler, SamplingConfig

MAPS_DIR = Path(__file__).resolve().parent.parent / "maps"


def load_map(
    name: str,
    bindings: Optional[Mapping[str, object]] = None,
    seed: Optional[int] = None,
    nonzero: bool = True,
) -> PolynomialMap:
    """Read a shipped map, binding free parameters from ``seed`` when given."""

    doc = read_map_file(MAPS_DIR / name)
    sampler = RationalSampler(SamplingConfig(seed=seed, nonzero=nonzero)) if seed is not None else None
    return bind_parameters(doc, bindings, sampler)


@pytest.fixture
def maps_dir() -> Path:
    return MAPS_DIR


@pytest.fixture
def sampler() -> RationalSampler:
    return RationalSampler(SamplingConfig(seed=20240611))


@pytest.fixture
def worked_example() -> PolynomialMap:
    return load_map("ex31.map")
