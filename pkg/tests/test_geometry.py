import numpy as np
import pytest

from ltn.geometry import (Mesh1D, build_meshes, layer_nodes, parse_grid_size,
                          standard_layout)


def test_standard_layout_basic():
    lay = standard_layout(0.065)
    assert lay.overlap == (0.75, 1.065)
    assert lay.kappa == pytest.approx(0.315)
    assert lay.domain_n == (-0.065, 1.065)
    assert lay.eta_D == (-0.065, 0.0)


def test_standard_layout_thin():
    lay = standard_layout(0.010)
    assert lay.eta_c == (1.0, 1.01)


def test_layout_epsilon_out_of_range():
    with pytest.raises(ValueError):
        standard_layout(0.3)
    with pytest.raises(ValueError):
        standard_layout(0.0)


@pytest.mark.parametrize("eps", [0.01, 0.065])
@pytest.mark.parametrize("k", [3, 5, 7])
def test_interface_points_are_exact_nodes(eps, k):
    lay = standard_layout(eps)
    mesh_n, mesh_l = build_meshes(lay, 2.0 ** -k)
    for p in (-eps, 0.0, 0.75, 1.0, 1.0 + eps):
        assert mesh_n.node_index(p) >= 0
    for p in (0.75, 1.0, 1.75):
        assert mesh_l.node_index(p) >= 0


def test_element_sizes_near_uniform():
    lay = standard_layout(0.065)
    for k in (3, 4, 5, 6, 7):
        h = 2.0 ** -k
        mesh_n, mesh_l = build_meshes(lay, h)
        for mesh in (mesh_n, mesh_l):
            assert np.all(np.abs(mesh.element_sizes - h) / h <= 1.0 + 1e-12)


def test_layer_elements_align_with_grid():
    # layer cells step h from the interface; the remainder sits at the far end
    nodes = layer_nodes(1.0, 1.065, 2.0 ** -5)
    assert nodes[0] == 1.0 and nodes[-1] == pytest.approx(1.065)
    assert np.allclose(np.diff(nodes)[:-1], 2.0 ** -5)
    assert np.diff(nodes)[-1] == pytest.approx(0.065 - 2 * 2.0 ** -5)


def test_coarse_h_rejected():
    lay = standard_layout(0.010)
    with pytest.raises(ValueError):
        build_meshes(lay, 0.5)


def test_paper_grid_sizes_accepted_for_thin_layers():
    # layers thinner than h are still meshed (one element)
    lay = standard_layout(0.010)
    mesh_n, _ = build_meshes(lay, 0.125)
    assert mesh_n.elements_within(lay.eta_c).size == 1


def test_mesh_validation():
    with pytest.raises(ValueError):
        Mesh1D(np.array([0.0, 0.0, 1.0]), h=0.5)
    with pytest.raises(ValueError):
        Mesh1D(np.array([1.0]), h=0.5)


def test_element_lookup_half_open():
    mesh = Mesh1D(np.array([0.0, 0.5, 1.0]), h=0.5)
    assert mesh.element_of(0.5) == 1      # node belongs to the right element
    assert mesh.element_of(1.0) == 1      # last element is closed
    assert mesh.element_of(0.25) == 0


def test_parse_grid_size():
    assert parse_grid_size("2^-5") == 0.03125
    assert parse_grid_size("2^-7") == 2.0 ** -7
    assert parse_grid_size(0.1) == 0.1
    assert parse_grid_size("0.125") == 0.125
