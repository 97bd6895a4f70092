"""Configuración de pytest y fixtures compartidos."""

from pathlib import Path

import numpy as np
import pytest

TOY_URDF = """<?xml version="1.0"?>
<robot name="mini">
  <link name="base">
    <collision><origin xyz="0 0 0" rpy="0 0 0"/><geometry><box size="0.02 0.04 0.02"/></geometry></collision>
  </link>
  <link name="l1">
    <collision><origin xyz="0.02 0 0" rpy="0 0 0"/><geometry><box size="0.04 0.01 0.01"/></geometry></collision>
  </link>
  <link name="l2">
    <collision><origin xyz="0.015 0 0" rpy="0 0 0"/><geometry><box size="0.03 0.01 0.01"/></geometry></collision>
  </link>
  <joint name="j1" type="revolute">
    <parent link="base"/><child link="l1"/>
    <origin xyz="0.01 0 0" rpy="0 0 0"/><axis xyz="0 0 1"/>
    <limit lower="-1.0" upper="1.5"/>
  </joint>
  <joint name="j2" type="revolute">
    <parent link="l1"/><child link="l2"/>
    <origin xyz="0.04 0 0" rpy="0 0 0"/><axis xyz="0 0 2"/>
    <limit lower="0.0" upper="1.2"/>
  </joint>
</robot>
"""

MINI_MAPPING = {
    "embodiment": "mini",
    "entries": [{"joint": "j1", "slot": "index_0"}, {"joint": "j2", "slot": "index_1"}],
}


@pytest.fixture
def project_root():
    """Retorna la raíz del proyecto."""
    return Path(__file__).parent.parent


@pytest.fixture
def mini_urdf(tmp_path):
    """URDF de un dedo de dos joints con su mapeo junto al archivo."""
    import json

    urdf_path = tmp_path / "mini.urdf"
    urdf_path.write_text(TOY_URDF, encoding="utf-8")
    (tmp_path / "mini.mapping.json").write_text(json.dumps(MINI_MAPPING), encoding="utf-8")
    return urdf_path


@pytest.fixture
def toy_hand():
    """Pinza de dos dedos incluida en el paquete."""
    from py_morphgrasp.hand.embodiment import load_builtin_embodiment

    return load_builtin_embodiment("toy_gripper")


@pytest.fixture
def shadow_hand():
    from py_morphgrasp.hand.embodiment import load_builtin_embodiment

    return load_builtin_embodiment("shadow")


@pytest.fixture
def small_box():
    """Cubo de 10 cm centrado en el origen, con malla."""
    from py_morphgrasp.geometry.objects import box_object

    return box_object((0.1, 0.1, 0.1), n_points=512, seed=0)


@pytest.fixture
def tiny_run_config():
    """Configuración mínima para entrenar en segundos."""
    from py_morphgrasp.config import RunConfig, apply_overrides

    return apply_overrides(
        RunConfig(),
        [
            "model.feature_dim=16",
            "model.morph_layers=1",
            "model.morph_heads=2",
            "model.max_hops=4",
            "model.denoiser_blocks=1",
            "model.point_groups=8",
            "model.group_size=8",
            "model.cloud_points=128",
            "schedule.steps=10",
            "loss.hand_points=64",
            "train.batch_size=4",
            "train.steps=4",
            "train.checkpoint_every=2",
            "train.log_every=1",
            "train.learning_rate=0.001",
        ],
    )


@pytest.fixture
def toy_dataset():
    """Dataset sintético pequeño (esferas y una caja)."""
    from py_morphgrasp.data.toy import ToyConfig, generate_toy_dataset

    return generate_toy_dataset(ToyConfig(n_grasps=6, cloud_points=256), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def parameter_gradcheck():
    """
    gradcheck respecto a los parámetros de un módulo (los de hasta max_numel
    elementos, o los indicados en ``names``).

    ``objective(call)`` recibe ``call(*args)``, que ejecuta el módulo con los
    parámetros perturbados, y devuelve un escalar.
    """
    import torch
    from torch.func import functional_call

    def check(module, objective, names=None, max_numel=300, **tolerances):
        chosen = [
            (name, param)
            for name, param in module.named_parameters()
            if (name in names if names is not None else param.numel() <= max_numel)
        ]
        assert chosen, "Ningún parámetro seleccionado"
        keys = [name for name, _ in chosen]
        values = tuple(param.detach().clone().requires_grad_(True) for _, param in chosen)

        def wrapped(*tensors):
            overrides = dict(zip(keys, tensors))
            return objective(lambda *args: functional_call(module, overrides, args))

        options = dict(atol=1e-6, rtol=1e-3)
        options.update(tolerances)
        return torch.autograd.gradcheck(wrapped, values, **options)

    return check
