import numpy as np
import pytest

from openstokes import fem, mesh, outlets


def make_specs(lam=1.0, gamma=0.1, levels=(0.0, 0.0)):
    return [
        outlets.OutletSpec(k, lam, gamma, outlets.Constant(levels[k - 1]))
        for k in (1, 2)
    ]


@pytest.fixture(scope="session")
def unit_channel():
    return mesh.build_channel(1.0, 1.0, 4, 4)


@pytest.fixture(scope="session")
def unit_space(unit_channel):
    return fem.TaylorHoodSpace(unit_channel)


@pytest.fixture(scope="session")
def unit_ops(unit_space):
    return fem.apply_noslip(fem.assemble_operators(unit_space))


@pytest.fixture(scope="session")
def channel_2x1():
    return mesh.build_channel(2.0, 1.0, 8, 4)


@pytest.fixture(scope="session")
def ops_2x1(channel_2x1):
    space = fem.TaylorHoodSpace(channel_2x1)
    return fem.apply_noslip(fem.assemble_operators(space))


def random_free_vector(ops, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(len(ops.free))
