import math

import pytest

from sfwm.doppler import GridSpec, QuadratureSpec, averaged_response
from sfwm.cache import ResponseCache
from sfwm.params import PhysicalParams


def probe_grid(nodes=2**12, span_ghz=1.0):
    """Small but production-legal grid for unit tests."""
    return GridSpec(span=span_ghz * 1000.0 / 6.0, nodes=nodes)


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("response-cache")


@pytest.fixture(scope="session")
def narrowband_params():
    """The reference high-depth, far-detuned operating point."""
    return PhysicalParams()


@pytest.fixture(scope="session")
def probe_responses(narrowband_params, cache_dir):
    """One cheap averaged-response triple shared across the suite."""
    cache = ResponseCache(cache_dir)
    return averaged_response(narrowband_params, probe_grid(), QuadratureSpec(), cache=cache)


def assert_close(actual, expected, rel, what=""):
    assert math.isfinite(actual), f"{what}: non-finite value {actual}"
    err = abs(actual - expected) / abs(expected)
    assert err <= rel, f"{what}: {actual:.6g} vs {expected:.6g} (rel err {err:.3g} > {rel})"
