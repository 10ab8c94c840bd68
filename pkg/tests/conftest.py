import math

import pytest

from roiseal import WatermarkParams, detect_roi, embeddable_blocks, gen_phantom


def coprime_key(n: int, candidates=(37, 41, 43, 101, 257)) -> int:
    for k in candidates:
        if math.gcd(k, n) == 1:
            return k
    raise AssertionError(f"no candidate key coprime with {n}")


@pytest.fixture(scope="session")
def phantom800():
    return gen_phantom(800, 600, 1)


@pytest.fixture(scope="session")
def roi800(phantom800):
    return detect_roi(phantom800)


@pytest.fixture(scope="session")
def params800(phantom800, roi800):
    n = len(embeddable_blocks(phantom800.width, phantom800.height, roi800, 1))
    return WatermarkParams(key=coprime_key(n))


@pytest.fixture(scope="session")
def phantom320():
    # small enough for fast tests, big enough to hold all 256 digest blocks
    return gen_phantom(320, 240, 7)


@pytest.fixture(scope="session")
def roi320(phantom320):
    return detect_roi(phantom320)


@pytest.fixture(scope="session")
def params320(phantom320, roi320):
    n = len(embeddable_blocks(phantom320.width, phantom320.height, roi320, 1))
    return WatermarkParams(key=coprime_key(n))
