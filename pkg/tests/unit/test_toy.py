"""Tests unitarios para el generador de agarres sintéticos."""

import numpy as np
import pytest


class TestGripperGeometry:
    """Tests para las medidas leídas de la pinza."""

    def test_measures_from_tree(self, toy_hand):
        from py_morphgrasp.data.toy import GripperGeometry

        geometry = GripperGeometry.from_embodiment(toy_hand)

        assert geometry.mount == pytest.approx(0.05)
        assert geometry.span == pytest.approx(0.10)
        assert geometry.proximal == pytest.approx(0.06)
        assert geometry.distal == pytest.approx(0.04)
        assert geometry.limit == pytest.approx(2.2)
        assert geometry.finger_sign == {"thumb": 1.0, "index": -1.0}

    def test_rejects_dexterous_hand(self, shadow_hand):
        from py_morphgrasp.data.toy import GripperGeometry
        from py_morphgrasp.exceptions import GenerationError

        with pytest.raises(GenerationError, match="pinza"):
            GripperGeometry.from_embodiment(shadow_hand)

    def test_second_finger_mirrored(self, toy_hand):
        from py_morphgrasp.data.toy import GripperGeometry

        geometry = GripperGeometry.from_embodiment(toy_hand)
        theta = geometry.native_angles(toy_hand, 0.3, -0.7)

        by_name = dict(zip(toy_hand.mapping.joint_names, theta))
        assert by_name == pytest.approx({"a1": 0.3, "a2": -0.7, "b1": -0.3, "b2": 0.7})

    def test_sphere_too_large(self, toy_hand):
        from py_morphgrasp.data.toy import GripperGeometry
        from py_morphgrasp.exceptions import GenerationError

        geometry = GripperGeometry.from_embodiment(toy_hand)

        with pytest.raises(GenerationError):
            geometry.sphere_grasp(0.03, clearance=1.0)

    def test_box_too_wide(self, toy_hand):
        from py_morphgrasp.data.toy import GripperGeometry
        from py_morphgrasp.exceptions import GenerationError

        geometry = GripperGeometry.from_embodiment(toy_hand)

        with pytest.raises(GenerationError, match="no alcanza"):
            geometry.box_grasp((0.04, 0.4, 0.04))


class TestAxisRotations:
    def test_twenty_four_proper_rotations(self):
        from py_morphgrasp.data.toy import axis_rotations

        rotations = axis_rotations()

        assert len(rotations) == 24
        for R in rotations:
            np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(R) == pytest.approx(1.0)
        assert len({R.tobytes() for R in rotations}) == 24


class TestGenerateToyDataset:
    """Tests para generate_toy_dataset."""

    def test_objects_assigned_cyclically(self, toy_dataset):
        assert [r.object for r in toy_dataset.records] == [0, 1, 2, 0, 1, 2]
        assert toy_dataset.splits == {"train": toy_dataset.object_ids}
        toy_dataset.validate()

    def test_deterministic_for_seed(self):
        from py_morphgrasp.data.toy import ToyConfig, generate_toy_dataset

        toy_config = ToyConfig(n_grasps=4, cloud_points=64)
        a = generate_toy_dataset(toy_config, seed=7)
        b = generate_toy_dataset(toy_config, seed=7)
        c = generate_toy_dataset(toy_config, seed=8)

        np.testing.assert_array_equal(a.pose_matrix(), b.pose_matrix())
        assert not np.array_equal(a.pose_matrix(), c.pose_matrix())

    def test_sphere_fingertips_touch_surface(self, toy_dataset):
        """Las puntas quedan a distancia r del centro de la esfera."""
        from py_morphgrasp.data.toy import fingertip_positions

        embodiment = toy_dataset.embodiments[0]
        for record in toy_dataset.records:
            if record.object == 2:
                continue
            radius = (0.03, 0.025)[record.object]
            tips = fingertip_positions(embodiment, record.pose)

            np.testing.assert_allclose(np.linalg.norm(tips, axis=1), radius, atol=1e-6)

    def test_box_fingertips_touch_surface(self, toy_dataset):
        from py_morphgrasp.data.toy import fingertip_positions
        from py_morphgrasp.geometry.sdf import object_sdf

        embodiment = toy_dataset.embodiments[0]
        box = toy_dataset.objects[2]
        sdf = object_sdf(box)
        for record in toy_dataset.records:
            if record.object != 2:
                continue
            tips = fingertip_positions(embodiment, record.pose)

            np.testing.assert_allclose(sdf.numpy(tips), 0.0, atol=1e-6)

    def test_box_fingertips_antipodal(self, toy_dataset):
        """En la caja las puntas tocan el centro de dos caras opuestas."""
        from py_morphgrasp.data.toy import fingertip_positions

        embodiment = toy_dataset.embodiments[0]
        tips = fingertip_positions(embodiment, toy_dataset.records[2].pose)

        np.testing.assert_allclose(tips[0], -tips[1], atol=1e-9)

    def test_unsupported_embodiment(self):
        from py_morphgrasp.data.toy import ToyConfig, generate_toy_dataset
        from py_morphgrasp.exceptions import GenerationError

        with pytest.raises(GenerationError, match="shadow"):
            generate_toy_dataset(ToyConfig(embodiment="shadow"))

    def test_no_objects(self):
        from py_morphgrasp.data.toy import ToyConfig, generate_toy_dataset
        from py_morphgrasp.exceptions import GenerationError

        with pytest.raises(GenerationError, match="objetos"):
            generate_toy_dataset(ToyConfig(sphere_radii=(), box_extents=()))
