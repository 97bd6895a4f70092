"""Tests unitarios para las pérdidas de entrenamiento."""

import math

import numpy as np
import pytest
import torch


class TestJointWeights:
    """Tests para joint_weights."""

    def test_serial_chain_values(self):
        from py_morphgrasp.core.losses import joint_weights

        weights = joint_weights([2, 1, 0], [1, 1, 1])

        assert weights.G == pytest.approx(6 ** (1 / 3))
        np.testing.assert_allclose(weights.w, [1.28490, 1.04912, 0.74184], atol=1e-4)

    def test_leaves_only(self):
        from py_morphgrasp.core.losses import joint_weights

        weights = joint_weights([0, 0, 0, 0], [1, 1, 1, 1])

        assert weights.G == 1.0
        assert weights.w.tolist() == [1.0, 1.0, 1.0, 1.0]

    def test_masked_slots_get_zero(self):
        from py_morphgrasp.core.losses import joint_weights

        weights = joint_weights([3, 0, 0], [1, 0, 0])

        assert weights.w.tolist() == [1.0, 0.0, 0.0]

    def test_empty_mask(self):
        from py_morphgrasp.core.losses import joint_weights
        from py_morphgrasp.exceptions import DomainError

        with pytest.raises(DomainError):
            joint_weights([0, 0], [0, 0])

    def test_geometric_mean_is_one(self):
        from py_morphgrasp.core.losses import joint_weights

        rng = np.random.default_rng(0)
        for _ in range(1000):
            delta = rng.integers(0, 2, 24)
            delta[rng.integers(0, 24)] = 1
            c = np.where(delta == 1, rng.integers(0, 6, 24), 0)
            w = joint_weights(c, delta).w

            assert math.exp(np.log(w[delta == 1]).mean()) == pytest.approx(1.0, abs=1e-9)

    def test_shadow_counts(self, shadow_hand, toy_hand):
        from py_morphgrasp.core.losses import canonical_descendant_counts

        toy = canonical_descendant_counts(toy_hand.tree, toy_hand.mapping)
        shadow = canonical_descendant_counts(shadow_hand.tree, shadow_hand.mapping)

        assert toy[[0, 1, 5, 6]].tolist() == [1, 0, 1, 0]
        assert np.count_nonzero(toy) == 2
        assert shadow.max() == 23


class TestMorphLoss:
    """Tests para morph_loss."""

    def _pose(self, theta_c, delta, t=(0.0, 0.0, 0.0)):
        from py_morphgrasp.hand.canonical import CanonicalPose
        from py_morphgrasp.hand.rotation import IDENTITY_R6

        return CanonicalPose(
            t=np.asarray(t, dtype=float),
            r6=IDENTITY_R6.copy(),
            theta_c=np.asarray(theta_c, dtype=float),
            delta=np.asarray(delta, dtype=np.uint8),
        )

    def test_single_leaf_joint(self):
        from py_morphgrasp.core.losses import joint_weights, morph_loss

        delta = np.zeros(24, dtype=np.uint8)
        delta[5] = 1
        target_theta = np.zeros(24)
        pred_theta = np.zeros(24)
        pred_theta[5] = 0.5

        loss = morph_loss(
            self._pose(pred_theta, delta), self._pose(target_theta, delta), joint_weights(np.zeros(24), delta)
        )

        assert loss.item() == pytest.approx(0.25)

    def test_masked_channels_are_ignored(self):
        from py_morphgrasp.core.losses import joint_weights, morph_loss

        delta = np.zeros(24, dtype=np.uint8)
        delta[:2] = 1
        pred = np.zeros(24)
        pred[10] = 3.0

        loss = morph_loss(
            self._pose(pred, delta, t=(0.1, 0.0, 0.0)),
            self._pose(np.zeros(24), delta),
            joint_weights(np.zeros(24), delta),
        )

        assert loss.item() == pytest.approx(0.01)

    def test_mask_mismatch(self):
        from py_morphgrasp.core.losses import joint_weights, morph_loss
        from py_morphgrasp.exceptions import EmbodimentError

        a = np.zeros(24, dtype=np.uint8)
        a[0] = 1
        b = a.copy()
        b[1] = 1

        with pytest.raises(EmbodimentError):
            morph_loss(self._pose(np.zeros(24), a), self._pose(np.zeros(24), b), joint_weights(np.zeros(24), a))


class TestReconLoss:
    """Tests para recon_loss."""

    def test_ones_against_zero(self):
        from py_morphgrasp.core.losses import recon_loss

        assert recon_loss(torch.zeros(33), torch.ones(33)).item() == pytest.approx(1.0)

    def test_symmetric(self):
        from py_morphgrasp.core.losses import recon_loss

        a, b = torch.randn(4, 33, generator=torch.Generator().manual_seed(0)), torch.zeros(4, 33)

        assert recon_loss(a, b).item() == pytest.approx(recon_loss(b, a).item())

    def test_channel_selection(self):
        from py_morphgrasp.core.losses import recon_loss

        channels = np.ones(33, dtype=bool)
        channels[3:9] = False
        eps_hat = torch.zeros(1, 33)
        eps_hat[0, 3:9] = 10.0

        assert recon_loss(torch.zeros(1, 33), eps_hat, channels).item() == 0.0


def _brute_spf(points, cloud, tau, eps):
    total, members = 0.0, 0
    for p in points:
        d = min(np.linalg.norm(p - q) for q in cloud)
        if d < tau:
            total += math.sqrt(d)
            members += 1
    return total / (members + eps)


def _brute_srf(points, labels, adjacency, d_th):
    adjacent = {tuple(sorted(pair)) for pair in adjacency}
    total = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            a, b = int(labels[i]), int(labels[j])
            if a == b or tuple(sorted((a, b))) in adjacent:
                continue
            total += max(0.0, d_th - np.linalg.norm(points[i] - points[j]))
    return total / len(set(labels.tolist()))


class TestSurfacePullingLoss:
    """Tests para spf_loss."""

    def test_single_point_in_range(self):
        from py_morphgrasp.core.losses import spf_loss

        cloud = np.array([[0.0, 0.0, 0.0]])
        points = np.array([[0.0004, 0.0, 0.0], [0.5, 0.0, 0.0]])

        assert spf_loss(points, cloud).item() == pytest.approx(0.02, rel=1e-6)

    def test_all_far_is_zero(self):
        from py_morphgrasp.core.losses import spf_loss

        assert spf_loss(np.ones((5, 3)), np.zeros((1, 3))).item() == 0.0

    def test_empty_cloud(self):
        from py_morphgrasp.core.losses import spf_loss
        from py_morphgrasp.exceptions import DomainError

        with pytest.raises(DomainError):
            spf_loss(np.zeros((2, 3)), np.zeros((0, 3)))

    def test_matches_brute_force(self, rng):
        from py_morphgrasp.config import LossConfig
        from py_morphgrasp.core.losses import spf_loss, spf_membership

        cloud = rng.uniform(-0.05, 0.05, (80, 3))
        points = rng.uniform(-0.08, 0.08, (120, 3))
        config = LossConfig(tau=0.01)

        assert spf_loss(points, cloud, config).item() == pytest.approx(
            _brute_spf(points, cloud, 0.01, config.eps_guard), abs=1e-9
        )
        assert spf_membership(points, cloud, 0.02) >= spf_membership(points, cloud, 0.01)


class TestExternalPenetrationLoss:
    """Tests para erf_loss."""

    def test_one_point_inside(self, small_box):
        from py_morphgrasp.core.losses import erf_loss

        points = np.tile([0.5, 0.0, 0.0], (10, 1))
        points[0] = [0.04, 0.0, 0.0]  # SDF = -0.01

        assert erf_loss(points, small_box).item() == pytest.approx(0.001, abs=1e-9)

    def test_deeper_is_larger(self, small_box):
        from py_morphgrasp.core.losses import erf_loss

        shallow = erf_loss(np.array([[0.045, 0.0, 0.0]]), small_box).item()
        deep = erf_loss(np.array([[0.03, 0.0, 0.0]]), small_box).item()

        assert deep > shallow > 0.0

    def test_all_outside(self, small_box):
        from py_morphgrasp.core.losses import erf_loss

        assert erf_loss(np.array([[0.2, 0.2, 0.2], [-0.3, 0.0, 0.0]]), small_box).item() == 0.0


class TestSelfPenetrationLoss:
    """Tests para srf_loss."""

    def test_two_links(self):
        from py_morphgrasp.config import LossConfig
        from py_morphgrasp.core.losses import srf_loss

        points = np.array([[0.0, 0.0, 0.0], [0.005, 0.0, 0.0]])

        loss = srf_loss(points, LossConfig(d_th=0.01), link_index=np.array([0, 1]))

        assert loss.item() == pytest.approx(0.0025)

    def test_adjacent_links_are_excluded(self):
        from py_morphgrasp.config import LossConfig
        from py_morphgrasp.core.losses import srf_loss

        points = np.array([[0.0, 0.0, 0.0], [0.005, 0.0, 0.0]])
        labels = np.array([0, 1])

        assert srf_loss(points, LossConfig(d_th=0.01), labels, adjacency=[(0, 1)]).item() == 0.0
        kept = srf_loss(points, LossConfig(d_th=0.01, exclude_adjacent=False), labels, adjacency=[(0, 1)])
        assert kept.item() == pytest.approx(0.0025)

    def test_single_link(self):
        from py_morphgrasp.core.losses import srf_loss

        assert srf_loss(np.zeros((4, 3)), link_index=np.zeros(4, dtype=int)).item() == 0.0

    def test_requires_labels(self):
        from py_morphgrasp.core.losses import srf_loss
        from py_morphgrasp.exceptions import DomainError

        with pytest.raises(DomainError):
            srf_loss(np.zeros((4, 3)))

    def test_matches_brute_force(self, rng):
        from py_morphgrasp.config import LossConfig
        from py_morphgrasp.core.losses import srf_loss

        points = rng.uniform(0.0, 0.02, (60, 3))
        labels = rng.integers(0, 4, 60)
        adjacency = [(0, 1), (1, 2)]

        loss = srf_loss(points, LossConfig(d_th=0.008), labels, adjacency)

        assert loss.item() == pytest.approx(_brute_srf(points, labels, adjacency, 0.008), abs=1e-9)


class TestTotalLoss:
    """Tests para total_loss."""

    def test_weighted_sum(self):
        from py_morphgrasp.core.losses import total_loss

        total, report = total_loss({"recon": 1, "morph": 2, "spf": 3, "erf": 4, "srf": 5})

        assert total.item() == 15.0
        assert report.to_dict()["spf"] == 3.0

    def test_zero_alphas(self):
        from py_morphgrasp.config import LossConfig
        from py_morphgrasp.core.losses import total_loss

        config = LossConfig(alpha_spf=0.0, alpha_erf=0.0, alpha_srf=0.0)

        total, _ = total_loss({"recon": 1, "morph": 2, "spf": 3, "erf": 4, "srf": 5}, config)

        assert total.item() == 3.0

    def test_non_finite_term(self):
        from py_morphgrasp.core.losses import total_loss
        from py_morphgrasp.exceptions import NumericError

        with pytest.raises(NumericError) as exc_info:
            total_loss({"recon": 1.0, "erf": torch.tensor(float("nan"))})
        assert exc_info.value.where == "erf"


@pytest.mark.gradient
class TestGradients:
    """Gradientes analíticos contra diferencias finitas."""

    def test_physics_losses(self, toy_hand, small_box):
        from py_morphgrasp.config import LossConfig
        from py_morphgrasp.core.losses import erf_loss_rows, spf_loss_rows, srf_loss_rows
        from py_morphgrasp.hand.surface import HandSurface

        surface = HandSurface(toy_hand)
        samples = surface.draw(48, seed=0)
        config = LossConfig(tau=0.05, d_th=0.03)

        def objective(x):
            points = surface.points(x, samples)
            return (
                spf_loss_rows(points, small_box, config)
                + erf_loss_rows(points, small_box)
                + srf_loss_rows(points, samples.link_index, config, surface.adjacency)
            ).sum()

        x = torch.zeros(1, 33, dtype=torch.float64)
        x[0, :3] = torch.tensor([-0.07, 0.004, 0.003])
        x[0, 3] = 1.0
        x[0, 7] = 1.0
        x[0, 9 + 0] = 0.4
        x[0, 9 + 5] = -0.4
        x.requires_grad_(True)

        assert torch.autograd.gradcheck(objective, (x,), eps=1e-7, atol=1e-5, rtol=1e-3)

    def test_recon_loss(self):
        from py_morphgrasp.core.diffusion import diffused_channels
        from py_morphgrasp.core.losses import recon_loss

        generator = torch.Generator().manual_seed(2)
        eps = torch.randn(3, 33, dtype=torch.float64, generator=generator)
        eps_hat = torch.randn(3, 33, dtype=torch.float64, generator=generator, requires_grad=True)
        channels = diffused_channels(True)

        assert torch.autograd.gradcheck(lambda x: recon_loss(eps, x, channels), (eps_hat,), atol=1e-6, rtol=1e-3)

    def test_morph_loss(self, shadow_hand):
        from py_morphgrasp.core.losses import canonical_descendant_counts, joint_weights, morph_loss

        weights = joint_weights(canonical_descendant_counts(shadow_hand.tree, shadow_hand.mapping), shadow_hand.mask)
        generator = torch.Generator().manual_seed(3)
        target = torch.randn(2, 33, dtype=torch.float64, generator=generator)
        pred = torch.randn(2, 33, dtype=torch.float64, generator=generator, requires_grad=True)
        delta = np.stack([shadow_hand.mask, shadow_hand.mask])

        assert torch.autograd.gradcheck(
            lambda x: morph_loss(x, target, weights, delta), (pred,), atol=1e-6, rtol=1e-3
        )
