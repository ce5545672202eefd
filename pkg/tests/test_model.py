"""Lattice geometry, hopping normalization, and reservoir serialization."""

import numpy as np
import pytest

from pplattice.errors import ConfigError
from pplattice.model import (LatticeShape, build_reservoir, lattice_edges,
                             load_reservoir, shape_for_modes, spectral_radius)


def test_shape_for_modes_square_or_chain():
    assert (shape_for_modes(1).rows, shape_for_modes(1).cols) == (1, 1)
    assert (shape_for_modes(4).rows, shape_for_modes(4).cols) == (2, 2)
    assert (shape_for_modes(9).rows, shape_for_modes(9).cols) == (3, 3)
    for n in (2, 3, 5, 6, 7, 12):
        shape = shape_for_modes(n)
        assert (shape.rows, shape.cols) == (1, n)
        assert shape.n_modes == n


def test_shape_validation():
    with pytest.raises(ConfigError):
        shape_for_modes(0)
    with pytest.raises(ConfigError):
        LatticeShape(rows=0, cols=3)


def test_edge_counts():
    assert lattice_edges(LatticeShape(1, 1)) == ()
    assert len(lattice_edges(LatticeShape(2, 2))) == 4
    assert len(lattice_edges(LatticeShape(3, 3))) == 12
    for rows, cols in ((1, 5), (2, 3), (4, 4), (3, 7)):
        edges = lattice_edges(LatticeShape(rows, cols))
        assert len(edges) == 2 * rows * cols - rows - cols
        assert len(set(edges)) == len(edges)


def test_edges_are_nearest_neighbours():
    rows, cols = 3, 4
    for i, j in lattice_edges(LatticeShape(rows, cols)):
        ri, ci = divmod(i, cols)
        rj, cj = divmod(j, cols)
        assert abs(ri - rj) + abs(ci - cj) == 1


def test_spectral_radius_small_matrices():
    assert spectral_radius(np.eye(2)) == pytest.approx(1.0, abs=1e-12)
    flip = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert spectral_radius(flip) == pytest.approx(2.0, abs=1e-12)


def test_spectral_radius_matches_dense_eigensolver():
    rng = np.random.default_rng(11)
    m = rng.standard_normal((5, 5))
    m = m + m.T
    expected = float(np.max(np.abs(np.linalg.eigvalsh(m))))
    assert spectral_radius(m) == pytest.approx(expected, abs=1e-8)


def test_single_mode_reservoir_has_no_hopping():
    spec = build_reservoir(1, kerr=0.1, seed=3)
    assert spec.n_modes == 1
    assert np.all(spec.hopping == 0.0)
    assert spec.eta == float(spec.input_weights[0] ** 2)


def test_hopping_symmetric_normalized_and_on_edges():
    for seed in (0, 1, 17):
        spec = build_reservoir(shape_for_modes(6), kerr=0.05, seed=seed)
        hop = spec.hopping
        assert np.array_equal(hop, hop.T)
        assert abs(spectral_radius(hop) - 1.0) < 1e-10
        allowed = set()
        for a, b in spec.edges:
            allowed.add((a, b))
            allowed.add((b, a))
        for a in range(spec.n_modes):
            for b in range(spec.n_modes):
                if (a, b) not in allowed:
                    assert hop[a, b] == 0.0
        assert spec.eta == float(np.sum(spec.input_weights ** 2))


def test_same_seed_rebuilds_identical_spec():
    first = build_reservoir(shape_for_modes(4), kerr=0.08, seed=42).dumps()
    second = build_reservoir(shape_for_modes(4), kerr=0.08, seed=42).dumps()
    assert first == second


def test_distinct_seeds_give_distinct_specs():
    texts = {build_reservoir(shape_for_modes(4), kerr=0.08, seed=s).dumps()
             for s in (1, 2, 3)}
    assert len(texts) == 3


def test_yaml_round_trip(tmp_path):
    spec = build_reservoir(shape_for_modes(4), kerr=0.1, drive=0.4, seed=9)
    path = tmp_path / "reservoir.yaml"
    spec.save(path)
    again = load_reservoir(path)
    assert again.dumps() == spec.dumps()
    assert np.array_equal(again.hopping, spec.hopping)
    assert np.array_equal(again.input_weights, spec.input_weights)


def test_parameter_validation():
    with pytest.raises(ConfigError):
        build_reservoir(2, kerr=-0.1, seed=0)
    with pytest.raises(ConfigError):
        build_reservoir(2, kerr=0.1, loss=0.0, seed=0)
    with pytest.raises(ConfigError):
        build_reservoir(2, kerr=0.1, source_loss=-1.0, seed=0)
