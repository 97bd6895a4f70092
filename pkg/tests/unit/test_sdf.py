"""Tests unitarios para objetos y distancias con signo."""

from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

points = arrays(np.float64, 3, elements=st.floats(min_value=-0.2, max_value=0.2, allow_nan=False))


@lru_cache(maxsize=None)
def _mesh_object(kind):
    from py_morphgrasp.geometry.objects import box_object, sphere_object

    if kind == "box":
        return box_object((0.1, 0.06, 0.04), n_points=64, seed=0)
    return sphere_object(0.05, n_points=64, seed=0, subdivisions=2)


class TestMeshSDF:
    """Tests para la SDF exacta de mallas cerradas."""

    def test_box_values(self, small_box):
        from py_morphgrasp.geometry.sdf import signed_distance

        queries = np.array(
            [
                [0.0, 0.0, 0.0],  # centro
                [0.2, 0.0, 0.0],  # frente a una cara
                [0.05, 0.0, 0.0],  # sobre la cara
                [0.0, 0.03, 0.0],  # dentro, cerca de una cara
                [0.08, 0.09, 0.0],  # frente a una arista
            ]
        )

        d = signed_distance(small_box, queries)

        np.testing.assert_allclose(
            d, [-0.05, 0.15, 0.0, -0.02, np.hypot(0.03, 0.04)], atol=1e-9
        )

    def test_sphere_sign(self):
        from py_morphgrasp.geometry.objects import sphere_object
        from py_morphgrasp.geometry.sdf import signed_distance

        sphere = sphere_object(0.05, n_points=64)

        d = signed_distance(sphere, np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]))

        assert d[0] < -0.045
        assert d[1] == pytest.approx(0.05, abs=1e-3)

    def test_tensor_in_tensor_out_with_gradient(self, small_box):
        import torch

        from py_morphgrasp.geometry.sdf import signed_distance

        q = torch.tensor([[0.2, 0.0, 0.0]], dtype=torch.float64, requires_grad=True)
        d = signed_distance(small_box, q)
        d.sum().backward()

        assert isinstance(d, torch.Tensor)
        torch.testing.assert_close(q.grad, torch.tensor([[1.0, 0.0, 0.0]], dtype=torch.float64))

    def test_open_mesh_rejected(self):
        from py_morphgrasp.exceptions import MeshValidationError
        from py_morphgrasp.geometry.sdf import MeshSDF

        vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

        with pytest.raises(MeshValidationError):
            MeshSDF(vertices, np.array([[0, 1, 2]]))

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from(["box", "sphere"]), points, points)
    def test_one_lipschitz(self, kind, p, q):
        """|sdf(p) - sdf(q)| <= |p - q| dentro, fuera y a través de la superficie."""
        from py_morphgrasp.geometry.sdf import signed_distance

        d = signed_distance(_mesh_object(kind), np.stack([p, q]))

        assert abs(d[0] - d[1]) <= np.linalg.norm(p - q) + 1e-9


class TestPointCloudSDF:
    """Tests para la aproximación con normales."""

    def test_plane_distance(self):
        from py_morphgrasp.geometry.objects import ObjectModel
        from py_morphgrasp.geometry.sdf import signed_distance

        xs, ys = np.meshgrid(np.linspace(-1, 1, 11), np.linspace(-1, 1, 11))
        points = np.stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)], axis=1)
        normals = np.tile([0.0, 0.0, 1.0], (len(points), 1))
        plane = ObjectModel("plane", points, normals=normals)

        d = signed_distance(plane, np.array([[0.0, 0.0, 0.3], [0.2, 0.2, -0.1]]))

        np.testing.assert_allclose(d, [0.3, -0.1])

    def test_without_mesh_or_normals(self):
        from py_morphgrasp.exceptions import CapabilityError
        from py_morphgrasp.geometry.objects import ObjectModel
        from py_morphgrasp.geometry.sdf import signed_distance

        bare = ObjectModel("bare", np.zeros((4, 3)))

        with pytest.raises(CapabilityError, match="ni normales"):
            signed_distance(bare, np.zeros((1, 3)))


class TestObjectModel:
    """Tests para la carga y transformación de objetos."""

    def test_non_unit_normals(self):
        from py_morphgrasp.exceptions import GeometryError
        from py_morphgrasp.geometry.objects import ObjectModel

        with pytest.raises(GeometryError, match="unitarias"):
            ObjectModel("x", np.zeros((2, 3)), normals=np.ones((2, 3)))

    def test_empty_cloud(self):
        from py_morphgrasp.exceptions import DomainError
        from py_morphgrasp.geometry.objects import ObjectModel

        with pytest.raises(DomainError):
            ObjectModel("x", np.zeros((0, 3)))

    def test_load_xyz_with_normals(self, tmp_path):
        from py_morphgrasp.geometry.objects import load_object

        path = tmp_path / "cloud.xyz"
        path.write_text("0 0 0 0 0 2\n1 0 0 0 0 2\n")

        obj = load_object(path, scale=0.5)

        assert obj.name == "cloud"
        np.testing.assert_allclose(obj.points[1], [0.5, 0.0, 0.0])
        np.testing.assert_allclose(obj.normals[0], [0.0, 0.0, 1.0])

    def test_load_xyz_bad_columns(self, tmp_path):
        from py_morphgrasp.exceptions import DomainError
        from py_morphgrasp.geometry.objects import load_object

        path = tmp_path / "cloud.xyz"
        path.write_text("0 0 0 1\n")

        with pytest.raises(DomainError, match="columnas"):
            load_object(path)

    def test_ply_round_trip_keeps_mesh(self, tmp_path, small_box):
        from py_morphgrasp.geometry.objects import load_object, save_object_ply

        path = save_object_ply(small_box, tmp_path / "box.ply")
        obj = load_object(path)

        assert obj.has_mesh
        assert len(obj.triangles) == len(small_box.triangles)

    def test_resampled_points_on_surface(self, small_box):
        assert small_box.n_points == 512
        # Cada punto está sobre alguna cara del cubo de 10 cm
        assert np.allclose(np.abs(small_box.points).max(axis=1), 0.05)

    def test_transformed_rotates_normals(self, small_box):
        from scipy.spatial.transform import Rotation

        R = Rotation.from_euler("z", 90, degrees=True).as_matrix()
        moved = small_box.transformed(R, (0.0, 0.0, 1.0))

        np.testing.assert_allclose(moved.normals, small_box.normals @ R.T)
        np.testing.assert_allclose(moved.points[:, 2], small_box.points[:, 2] + 1.0)
