from fractions import Fraction

import pytest

from divstab import io as dio


@pytest.fixture(scope="session")
def load():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = dio.load_model(name)
        return cache[name]
    return get


def F(x, y=1):
    return Fraction(x, y)
