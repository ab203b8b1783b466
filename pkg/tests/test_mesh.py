import math

import numpy as np
import pytest

from chemoplast import mesh as msh


def euler_characteristic(m):
    edges = np.concatenate([m.tris[:, [0, 1]], m.tris[:, [1, 2]], m.tris[:, [2, 0]]])
    n_edges = np.unique(np.sort(edges, axis=1), axis=0).shape[0]
    return m.n_nodes - n_edges + m.n_elements


class TestPlateWithHole:
    def test_total_area_matches_square_minus_disk(self):
        m = msh.generate_plate_with_hole(1.0, 0.05, 0.01)
        area = msh.signed_areas(m.nodes, m.tris).sum()
        exact = 1.0 - math.pi * 0.05**2
        assert abs(area - exact) / exact < 0.005

    def test_area_invariant_scaled_geometry(self):
        m = msh.generate_plate_with_hole(2.0, 0.3, 0.05)
        area = msh.signed_areas(m.nodes, m.tris).sum()
        exact = 4.0 - math.pi * 0.3**2
        assert abs(area - exact) / exact < 2 * 0.05 / 0.3

    def test_infeasible_hole(self):
        with pytest.raises(ValueError):
            msh.generate_plate_with_hole(1.0, 0.6, 0.01)

    def test_target_h_too_coarse(self):
        # fewer than 8 segments around the hole
        with pytest.raises(ValueError):
            msh.generate_plate_with_hole(1.0, 0.05, 0.045)

    def test_all_elements_positively_oriented(self):
        m = msh.generate_plate_with_hole(1.0, 0.1, 0.03)
        assert np.all(msh.signed_areas(m.nodes, m.tris) > 0)

    def test_boundary_tags_partition(self):
        m = msh.generate_plate_with_hole(1.0, 0.1, 0.03)
        assert set(m.tags()) == {"left", "right", "top", "bottom", "hole"}
        edges = np.concatenate([m.tris[:, [0, 1]], m.tris[:, [1, 2]], m.tris[:, [2, 0]]])
        key = np.sort(edges, axis=1)
        _, idx, counts = np.unique(key, axis=0, return_index=True, return_counts=True)
        assert (counts == 1).sum() == m.boundary_edges.shape[0]

    def test_hole_node_count_rule(self):
        # at least max(16, ceil(2 pi r / h)), rounded to a multiple of 8
        m = msh.generate_plate_with_hole(1.0, 0.05, 0.01)
        n_hole = len(m.nodes_with_tag("hole"))
        assert n_hole >= max(16, math.ceil(2 * math.pi * 0.05 / 0.01))
        assert n_hole % 8 == 0
        coarse = msh.generate_plate_with_hole(1.0, 0.05, 0.02)
        assert len(coarse.nodes_with_tag("hole")) == 16

    def test_euler_characteristic_genus_with_hole(self):
        m = msh.generate_plate_with_hole(1.0, 0.15, 0.05)
        assert euler_characteristic(m) == 0

    def test_every_node_referenced(self):
        m = msh.generate_plate_with_hole(1.0, 0.1, 0.04)
        assert np.array_equal(np.unique(m.tris), np.arange(m.n_nodes))

    def test_no_duplicate_nodes(self):
        from scipy.spatial import cKDTree
        m = msh.generate_plate_with_hole(1.0, 0.1, 0.04)
        assert not cKDTree(m.nodes).query_pairs(1e-12)

    def test_mesh_is_read_only(self):
        m = msh.generate_plate_with_hole(1.0, 0.1, 0.04)
        with pytest.raises(ValueError):
            m.nodes[0, 0] = 99.0


class TestAnnulus:
    def test_annulus_area(self):
        m = msh.generate_annulus(0.2, 1.0, 0.05)
        area = msh.signed_areas(m.nodes, m.tris).sum()
        exact = math.pi * (1.0 - 0.04)
        assert abs(area - exact) / exact < 0.01

    def test_solid_disk_has_no_inner_edges(self):
        m = msh.generate_annulus(0.0, 1.0, 0.05)
        assert len(m.edges_with_tag("inner")) == 0
        area = msh.signed_areas(m.nodes, m.tris).sum()
        assert abs(area - math.pi) / math.pi < 0.01

    def test_degenerate_annulus(self):
        with pytest.raises(ValueError):
            msh.generate_annulus(1.0, 1.0, 0.05)
        with pytest.raises(ValueError):
            msh.generate_annulus(-0.1, 1.0, 0.05)

    def test_euler_characteristics(self):
        assert euler_characteristic(msh.generate_annulus(0.3, 1.0, 0.08)) == 0
        assert euler_characteristic(msh.generate_annulus(0.0, 1.0, 0.08)) == 1

    def test_tags(self):
        m = msh.generate_annulus(0.3, 1.0, 0.08)
        assert set(m.tags()) == {"inner", "outer"}
        # inner and outer edge loops are closed: as many edges as nodes on each
        assert len(m.edges_with_tag("inner")) == len(m.nodes_with_tag("inner"))
        assert len(m.edges_with_tag("outer")) == len(m.nodes_with_tag("outer"))


class TestValidate:
    def test_single_equilateral(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
        m = msh.Mesh(nodes, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]),
                     np.array(["outer"] * 3), {})
        rep = msh.validate(m)
        assert rep.min_angle_deg == pytest.approx(60.0, abs=1e-9)
        assert rep.n_violations == 0
        assert rep.max_aspect == pytest.approx(1.0, abs=1e-9)

    def test_reversed_element_flagged(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        m = msh.Mesh(nodes, np.array([[0, 2, 1]]), np.array([[0, 1], [1, 2], [2, 0]]),
                     np.array(["outer"] * 3), {})
        rep = msh.validate(m)
        assert list(rep.inverted) == [0]

    def test_sliver_flagged(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 0.004]])
        m = msh.Mesh(nodes, np.array([[0, 1, 2]]), np.array([[0, 1], [1, 2], [2, 0]]),
                     np.array(["outer"] * 3), {})
        rep = msh.validate(m)
        assert list(rep.slivers) == [0]

    def test_generated_meshes_are_clean(self):
        for m in (msh.generate_plate_with_hole(1.0, 0.2, 0.02),
                  msh.generate_annulus(0.2, 1.0, 0.05),
                  msh.generate_annulus(0.0, 1.0, 0.05)):
            rep = msh.validate(m)
            assert rep.n_violations == 0
            assert rep.min_angle_deg >= 5.0

    def test_determinism(self):
        a = msh.generate_plate_with_hole(1.0, 0.07, 0.02)
        b = msh.generate_plate_with_hole(1.0, 0.07, 0.02)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.tris, b.tris)
        assert np.array_equal(a.boundary_edges, b.boundary_edges)
