"""Tests unitarios para el parser URDF y la cinemática directa."""

import math

import numpy as np
import pytest

from tests.conftest import TOY_URDF


class TestParseUrdf:
    """Tests para parse_urdf y load_urdf."""

    def test_dfs_order_and_dof(self, mini_urdf):
        from py_morphgrasp.kinematics.urdf import load_urdf

        tree = load_urdf(mini_urdf)

        assert tree.name == "mini"
        assert tree.root_link == "base"
        assert tree.dof_names == ("j1", "j2")
        assert tree.parent_of == (None, 0)

    def test_axis_is_normalized(self):
        from py_morphgrasp.kinematics.urdf import parse_urdf

        tree = parse_urdf(TOY_URDF)

        assert tree.joint("j2").axis == (0.0, 0.0, 1.0)

    def test_toy_gripper_order(self, toy_hand):
        assert toy_hand.tree.dof_names == ("a1", "a2", "b1", "b2")

    def test_barrett_mimic_joints_are_not_dof(self):
        from py_morphgrasp import config
        from py_morphgrasp.kinematics.urdf import load_urdf

        tree = load_urdf(config.builtin_hand_paths("barrett")["urdf"])

        assert len(tree.joints) == 11
        assert tree.n_dof == 8
        assert sum(1 for j in tree.joints if j.kind == "mimic") == 3

    def test_malformed_xml_reports_line(self):
        from py_morphgrasp.exceptions import URDFParseError
        from py_morphgrasp.kinematics.urdf import parse_urdf

        broken = '<robot name="x">\n  <link name="a">\n</robot>\n'

        with pytest.raises(URDFParseError) as exc_info:
            parse_urdf(broken)
        assert exc_info.value.line == 3

    def test_revolute_without_limit(self):
        from py_morphgrasp.exceptions import JointValidationError
        from py_morphgrasp.kinematics.urdf import parse_urdf

        text = TOY_URDF.replace('<limit lower="0.0" upper="1.2"/>', "")

        with pytest.raises(JointValidationError, match="j2"):
            parse_urdf(text)

    def test_inverted_limits(self):
        from py_morphgrasp.exceptions import JointValidationError
        from py_morphgrasp.kinematics.urdf import parse_urdf

        text = TOY_URDF.replace('lower="0.0" upper="1.2"', 'lower="1.2" upper="0.0"')

        with pytest.raises(JointValidationError):
            parse_urdf(text)

    def test_zero_axis(self):
        from py_morphgrasp.exceptions import JointValidationError
        from py_morphgrasp.kinematics.urdf import parse_urdf

        with pytest.raises(JointValidationError, match="eje nulo"):
            parse_urdf(TOY_URDF.replace('<axis xyz="0 0 2"/>', '<axis xyz="0 0 0"/>'))

    def test_cycle_is_rejected(self):
        from py_morphgrasp.exceptions import KinematicStructureError
        from py_morphgrasp.kinematics.urdf import parse_urdf

        cycle = TOY_URDF.replace(
            "</robot>",
            '<joint name="j3" type="fixed"><parent link="l2"/><child link="base"/></joint>\n</robot>',
        )

        with pytest.raises(KinematicStructureError):
            parse_urdf(cycle)

    def test_unknown_link_reference(self):
        from py_morphgrasp.exceptions import KinematicStructureError
        from py_morphgrasp.kinematics.urdf import parse_urdf

        with pytest.raises(KinematicStructureError, match="inexistente"):
            parse_urdf(TOY_URDF.replace('<child link="l2"/>', '<child link="l9"/>'))

    def test_mimic_limits_follow_source(self):
        from py_morphgrasp.kinematics.urdf import parse_urdf

        text = TOY_URDF.replace(
            '<limit lower="0.0" upper="1.2"/>', '<mimic joint="j1" multiplier="-2" offset="0.1"/>'
        )
        joint = parse_urdf(text).joint("j2")

        assert joint.kind == "mimic"
        assert joint.limit_lower == pytest.approx(-2.9)
        assert joint.limit_upper == pytest.approx(2.1)

    def test_written_urdf_parses_to_same_tree(self, shadow_hand):
        from py_morphgrasp.kinematics.urdf import parse_urdf, tree_to_dict, tree_to_urdf

        tree = shadow_hand.tree
        again = parse_urdf(tree_to_urdf(tree), name=tree.name)

        assert tree_to_dict(again) == tree_to_dict(tree)

    def test_link_adjacency(self, mini_urdf):
        from py_morphgrasp.kinematics.urdf import load_urdf

        tree = load_urdf(mini_urdf)

        assert tree.link_adjacency() == ((0, 1), (1, 2))


class TestForwardKinematics:
    """Tests para forward_kinematics y las validaciones de ángulos."""

    def test_zero_pose(self, toy_hand):
        from py_morphgrasp.kinematics.forward import forward_kinematics

        fk = forward_kinematics(toy_hand.tree, np.zeros(4))

        np.testing.assert_allclose(fk.position("a_distal"), [0.06, 0.05, 0.0], atol=1e-12)
        np.testing.assert_allclose(fk.position("b_distal"), [0.06, -0.05, 0.0], atol=1e-12)

    def test_quarter_turn(self, toy_hand):
        from py_morphgrasp.kinematics.forward import forward_kinematics

        fk = forward_kinematics(toy_hand.tree, [math.pi / 2, 0.0, 0.0, 0.0])

        np.testing.assert_allclose(fk.position("a_distal"), [0.0, 0.11, 0.0], atol=1e-12)
        R = fk.matrix("a_distal")[:3, :3]
        np.testing.assert_allclose(R @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], atol=1e-12)

    def test_batched_angles(self, toy_hand):
        from py_morphgrasp.kinematics.forward import forward_kinematics

        angles = np.array([[0.0, 0.0, 0.0, 0.0], [math.pi / 2, 0.0, 0.0, 0.0]])
        fk = forward_kinematics(toy_hand.tree, angles)

        assert fk.translations.shape == (2, 5, 3)
        np.testing.assert_allclose(fk.translations[1, 2], [0.0, 0.11, 0.0], atol=1e-12)

    def test_arity(self, toy_hand):
        from py_morphgrasp.exceptions import ArityError
        from py_morphgrasp.kinematics.forward import forward_kinematics

        with pytest.raises(ArityError, match="4 ángulos"):
            forward_kinematics(toy_hand.tree, [0.0, 0.0, 0.0])

    def test_limits(self, toy_hand):
        from py_morphgrasp.exceptions import JointLimitError
        from py_morphgrasp.kinematics.forward import check_joint_angles, forward_kinematics

        with pytest.raises(JointLimitError, match="a2"):
            forward_kinematics(toy_hand.tree, [0.0, 3.0, 0.0, 0.0])
        clamped = check_joint_angles(toy_hand.tree, [0.0, 3.0, 0.0, 0.0], clamp=True)
        assert clamped[1] == pytest.approx(2.2)

    def test_torch_chain_is_differentiable(self, toy_hand):
        import torch

        from py_morphgrasp.kinematics.forward import KinematicChain

        chain = KinematicChain(toy_hand.tree)
        angles = torch.zeros(4, dtype=torch.float64, requires_grad=True)
        tip = chain.link_matrices(angles)[2, 1, 3]  # y de a_distal
        tip.backward()

        # d y / d a1 = L1 cos(0) = 0.06
        assert angles.grad[0].item() == pytest.approx(0.06)


class TestSurfaceAndDescendants:
    """Tests para el muestreo de superficie y los descendientes."""

    def test_allocation_by_area(self):
        from py_morphgrasp.kinematics.forward import allocate_by_area

        counts = allocate_by_area([1.0, 1.0, 2.0], 10)

        assert counts.sum() == 10
        assert counts.tolist() == [3, 2, 5] or counts.tolist() == [2, 3, 5]

    def test_samples_lie_on_boxes(self, mini_urdf):
        from py_morphgrasp.kinematics.forward import draw_surface_samples
        from py_morphgrasp.kinematics.urdf import load_urdf

        tree = load_urdf(mini_urdf)
        samples = draw_surface_samples(tree, 300, seed=0)

        assert len(samples) == 300
        for link_idx, link in enumerate(tree.links):
            local = samples.local_points[samples.link_index == link_idx] - np.asarray(link.bbox_offset.xyz)
            half = np.asarray(link.bbox_extents) / 2
            assert np.all(np.abs(local) <= half + 1e-12)
            # Cada punto está sobre alguna cara
            assert np.all(np.isclose(np.abs(local), half).any(axis=1))

    def test_samples_are_deterministic(self, toy_hand):
        from py_morphgrasp.kinematics.forward import draw_surface_samples

        a = draw_surface_samples(toy_hand.tree, 64, seed=5)
        b = draw_surface_samples(toy_hand.tree, 64, seed=5)

        np.testing.assert_array_equal(a.local_points, b.local_points)

    def test_descendant_counts(self, toy_hand, shadow_hand):
        from py_morphgrasp.kinematics.forward import descendant_counts

        assert descendant_counts(toy_hand.tree).tolist() == [1, 0, 1, 0]
        counts = descendant_counts(shadow_hand.tree)
        assert counts.max() == shadow_hand.n_dof - 1


def _fmt(values):
    return " ".join(repr(float(v)) for v in values)


def _serial_chain_urdf(origins, axes, rpys=None):
    """URDF de una cadena serie con un link de caja por joint."""
    rpys = rpys or [(0.0, 0.0, 0.0)] * len(origins)
    parts = ['<robot name="chain">', '<link name="l0"/>']
    for k, (xyz, axis, rpy) in enumerate(zip(origins, axes, rpys), start=1):
        parts.append(
            f'<link name="l{k}"><collision><geometry><box size="0.1 0.1 0.1"/></geometry></collision></link>'
        )
        parts.append(
            f'<joint name="q{k}" type="revolute"><parent link="l{k - 1}"/><child link="l{k}"/>'
            f'<origin xyz="{_fmt(xyz)}" rpy="{_fmt(rpy)}"/>'
            f'<axis xyz="{_fmt(axis)}"/><limit lower="-3.2" upper="3.2"/></joint>'
        )
    parts.append("</robot>")
    return "\n".join(parts)


def _random_tree_urdf(rng, with_mimic, max_depth=6):
    """
    URDF de un árbol aleatorio con ramificación y profundidad max_depth.

    Returns:
        (texto, joints) con joints = [(nombre, padre, hijo, xyz, rpy, eje, mimic)]
    """
    depth = {"l0": 0}
    links = ["l0"]
    joints = []
    independent = []
    n_links = int(rng.integers(max_depth + 1, 3 * max_depth))
    for k in range(1, n_links):
        if k <= max_depth:
            parent = links[-1]  # primera rama hasta la profundidad máxima
        else:
            parent = str(rng.choice([name for name in links if depth[name] < max_depth]))
        child = f"l{k}"
        depth[child] = depth[parent] + 1
        links.append(child)
        axis = rng.normal(size=3)
        mimic = None
        if with_mimic and independent and rng.random() < 0.4:
            mimic = (str(rng.choice(independent)), float(rng.uniform(-1.5, 1.5)), float(rng.uniform(-0.3, 0.3)))
        else:
            independent.append(f"q{k}")
        joints.append(
            (f"q{k}", parent, child, rng.uniform(-0.1, 0.1, 3), rng.uniform(-1.0, 1.0, 3), axis / np.linalg.norm(axis), mimic)
        )

    parts = ['<robot name="tree">', '<link name="l0"/>']
    for name, parent, child, xyz, rpy, axis, mimic in joints:
        parts.append(f'<link name="{child}"/>')
        mimic_tag = f'<mimic joint="{mimic[0]}" multiplier="{mimic[1]!r}" offset="{mimic[2]!r}"/>' if mimic else ""
        parts.append(
            f'<joint name="{name}" type="revolute"><parent link="{parent}"/><child link="{child}"/>'
            f'<origin xyz="{_fmt(xyz)}" rpy="{_fmt(rpy)}"/><axis xyz="{_fmt(axis)}"/>'
            f'<limit lower="-3.2" upper="3.2"/>{mimic_tag}</joint>'
        )
    parts.append("</robot>")
    return "\n".join(parts), joints


class TestKinematicOracles:
    """Comparación con cálculos hechos a mano y composición ingenua."""

    def test_planar_two_link(self):
        from py_morphgrasp.kinematics.forward import forward_kinematics
        from py_morphgrasp.kinematics.urdf import parse_urdf

        text = _serial_chain_urdf([(0.0, 0.0, 0.0), (1.0, 0.0, 0.0)], [(0, 0, 1), (0, 0, 1)])
        text = text.replace(
            "</robot>",
            '<link name="tip"/><joint name="tip_joint" type="fixed"><parent link="l2"/>'
            '<child link="tip"/><origin xyz="1 0 0"/></joint>\n</robot>',
        )
        tree = parse_urdf(text)

        fk = forward_kinematics(tree, [math.pi / 2, math.pi / 2])

        np.testing.assert_allclose(fk.position("tip"), [-1.0, 1.0, 0.0], atol=1e-12)

    def test_random_chain_matches_naive_composition(self):
        from scipy.spatial.transform import Rotation

        from py_morphgrasp.kinematics.forward import forward_kinematics
        from py_morphgrasp.kinematics.urdf import parse_urdf, rpy_to_matrix

        rng = np.random.default_rng(7)
        for _ in range(20):
            origins = [tuple(rng.uniform(-0.1, 0.1, 3)) for _ in range(5)]
            rpys = [tuple(rng.uniform(-1.0, 1.0, 3)) for _ in range(5)]
            axes = [tuple(v / np.linalg.norm(v)) for v in rng.normal(size=(5, 3))]
            angles = rng.uniform(-3.0, 3.0, 5)
            tree = parse_urdf(_serial_chain_urdf(origins, axes, rpys))

            T = np.eye(4)
            for xyz, rpy, axis, q in zip(origins, rpys, axes, angles):
                origin = np.eye(4)
                origin[:3, :3] = rpy_to_matrix(rpy)
                origin[:3, 3] = xyz
                motion = np.eye(4)
                motion[:3, :3] = Rotation.from_rotvec(np.asarray(axis) * q).as_matrix()
                T = T @ origin @ motion

            fk = forward_kinematics(tree, angles)
            np.testing.assert_allclose(fk.matrix("l5"), T, atol=1e-9)

    @pytest.mark.parametrize("with_mimic", [False, True])
    def test_random_trees_match_naive_composition(self, with_mimic):
        """100 árboles aleatorios de profundidad 6 contra la composición link a link."""
        from scipy.spatial.transform import Rotation

        from py_morphgrasp.kinematics.forward import forward_kinematics
        from py_morphgrasp.kinematics.urdf import parse_urdf, rpy_to_matrix

        rng = np.random.default_rng(11 if with_mimic else 3)
        saw_mimic = False
        for _ in range(100):
            text, joints = _random_tree_urdf(rng, with_mimic)
            tree = parse_urdf(text)
            free = {name: rng.uniform(-1.0, 1.0) for name, *_, mimic in joints if mimic is None}

            transforms = {"l0": np.eye(4)}
            for name, parent, child, xyz, rpy, axis, mimic in joints:
                if mimic is None:
                    q = free[name]
                else:
                    saw_mimic = True
                    q = mimic[1] * free[mimic[0]] + mimic[2]
                origin = np.eye(4)
                origin[:3, :3] = rpy_to_matrix(rpy)
                origin[:3, 3] = xyz
                motion = np.eye(4)
                motion[:3, :3] = Rotation.from_rotvec(axis * q).as_matrix()
                transforms[child] = transforms[parent] @ origin @ motion

            fk = forward_kinematics(tree, [free[name] for name in tree.dof_names])

            assert tree.n_dof == len(free)
            for link, expected in transforms.items():
                np.testing.assert_allclose(fk.matrix(link), expected, atol=1e-9)

        assert saw_mimic == with_mimic

    def test_serial_descendants_decrease(self):
        from py_morphgrasp.kinematics.forward import descendant_counts
        from py_morphgrasp.kinematics.urdf import parse_urdf

        tree = parse_urdf(_serial_chain_urdf([(0.1, 0, 0)] * 4, [(0, 0, 1)] * 4))

        assert descendant_counts(tree).tolist() == [3, 2, 1, 0]

    def test_unit_cube_face_counts(self):
        from py_morphgrasp.kinematics.forward import draw_surface_samples
        from py_morphgrasp.kinematics.urdf import parse_urdf

        tree = parse_urdf(
            '<robot name="cube"><link name="c"><collision><geometry>'
            '<box size="1 1 1"/></geometry></collision></link></robot>'
        )

        samples = draw_surface_samples(tree, 6000, seed=11)
        counts = np.bincount(samples.face_index, minlength=6)

        sigma = math.sqrt(6000 * (1 / 6) * (5 / 6))
        assert np.all(np.abs(counts - 1000) < 3 * sigma)

    def test_translated_link_shifts_points(self, mini_urdf):
        from py_morphgrasp.kinematics.forward import LinkTransforms, sample_hand_surface
        from py_morphgrasp.kinematics.urdf import load_urdf

        tree = load_urdf(mini_urdf)
        n_links = len(tree.links)
        rotations = np.tile(np.eye(3), (n_links, 1, 1))
        still = LinkTransforms(tree.link_names, rotations, np.zeros((n_links, 3)))
        moved = LinkTransforms(tree.link_names, rotations, np.tile([0.1, -0.2, 0.3], (n_links, 1)))

        a = sample_hand_surface(tree, still, 50, seed=0)
        b = sample_hand_surface(tree, moved, 50, seed=0)

        np.testing.assert_allclose(b.points - a.points, np.tile([0.1, -0.2, 0.3], (50, 1)))
