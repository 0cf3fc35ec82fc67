"""Session-scoped fixtures for the heavy shared states.

Grid builds and Newton solves dominate suite runtime, so every state used
by more than one test module is built once here.
"""

import pytest

from aclab import (Grid, LayerSpec, ZERO_FLUX, build, build_layer_stack,
                   build_radial_layer, make_state, manufactured_forcing,
                   standard_corpus)


def square_grid(half_extent, points):
    return Grid(extent=(2 * half_extent, 2 * half_extent),
                points=(points, points), boundary=ZERO_FLUX,
                origin=(-half_extent, -half_extent))


def planar_state_at(eps, points, half_extent=1.0):
    g = square_grid(half_extent, points)
    u = build_layer_stack(g, eps, LayerSpec(positions=(0.0,), axis=1))
    return make_state(u, manufactured_forcing(u, eps), eps)


def circle_state_at(eps, points, radius=0.5, half_extent=1.0):
    g = square_grid(half_extent, points)
    u = build_radial_layer(g, eps, (0.0, 0.0), radius)
    return make_state(u, manufactured_forcing(u, eps), eps)


@pytest.fixture(scope="session")
def corpus():
    return standard_corpus()


@pytest.fixture(scope="session")
def planar_state():
    """planar-1: single layer, eps = 0.05, h = eps/8."""
    return planar_state_at(0.05, 321)


@pytest.fixture(scope="session")
def planar_state_fine():
    """planar-1 under h-halving (h = eps/16)."""
    return planar_state_at(0.05, 641)


@pytest.fixture(scope="session")
def circle_state():
    """Manufactured circle R = 0.5 at eps = 0.05, h = eps/8."""
    return circle_state_at(0.05, 321)


@pytest.fixture(scope="session")
def circle_state_fine():
    return circle_state_at(0.05, 641)


@pytest.fixture(scope="session")
def circle_corpus_states(corpus):
    """Manufactured circle states on the shared corpus grid, one per eps."""
    return build(corpus["circle"])


@pytest.fixture(scope="session")
def bubble_states(corpus):
    """Solved constant-forcing bubble states (circle-sweep scenario)."""
    return build(corpus["circle-sweep"])


@pytest.fixture(scope="session")
def solved_circle_state(corpus):
    return build(corpus["solved-circle"])[0]


@pytest.fixture(scope="session")
def stack2_state(corpus):
    return build(corpus["stack-2"])[0]


@pytest.fixture(scope="session")
def stack3_state(corpus):
    return build(corpus["stack-3"])[0]


@pytest.fixture(scope="session")
def sphere_state(corpus):
    return build(corpus["sphere"])[0]
