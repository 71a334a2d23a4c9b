import numpy as np
import pytest

from fairlift.data import SyntheticConfig, generate_synthetic
from fairlift.gam import AdditiveModel, Shape1D, Shape2D


@pytest.fixture(scope="session")
def synth_small():
    """10k-row synthetic dataset at c=0.5, shared across fast tests."""
    return generate_synthetic(SyntheticConfig(n=10_000, c=0.5, seed=123))


def linear_shape(feature, slope=1.0, lo=-3.0, hi=3.0, b=9):
    knots = np.linspace(lo, hi, b)
    return Shape1D(feature, knots, slope * knots)


def product_shape(i, j, coef=1.0, lo=-3.0, hi=3.0, b=9):
    ki = np.linspace(lo, hi, b)
    kj = np.linspace(lo, hi, b)
    return Shape2D((i, j), ki, kj, coef * np.outer(ki, kj))


def hand_built_gam(shapes1=(), shapes2=(), intercept=0.0, link="identity"):
    return AdditiveModel(intercept=intercept, shapes1=list(shapes1),
                         shapes2=list(shapes2), link=link)
