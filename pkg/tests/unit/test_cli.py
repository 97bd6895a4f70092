"""Tests unitarios para la CLI 'morphgrasp'."""

import json

import numpy as np
import pytest
from click.testing import CliRunner


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_config_file(tiny_run_config, tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_run_config.to_dict()), encoding="utf-8")
    return path


@pytest.fixture
def box_grasp_files(toy_dataset, tmp_path):
    """poses.json con los dos agarres de la caja, su nube y su malla."""
    from py_morphgrasp.geometry.objects import save_object_ply
    from py_morphgrasp.hand.canonical import poses_to_json

    box = toy_dataset.objects[2]
    poses_path = tmp_path / "poses.json"
    poses_path.write_text(poses_to_json([r.pose for r in toy_dataset.records if r.object == 2]), encoding="utf-8")
    cloud_path = tmp_path / "box.xyz"
    np.savetxt(cloud_path, np.hstack([box.points, box.normals]))
    mesh_path = save_object_ply(box, tmp_path / "box.ply")
    return poses_path, cloud_path, mesh_path


class TestMainGroup:
    def test_help_lists_commands(self, runner):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["--help"])

        assert result.exit_code == 0
        for name in ("inspect", "encode", "toydata", "train", "sample", "eval", "mutate", "loss-audit"):
            assert name in result.output

    def test_version(self, runner):
        from py_morphgrasp import __version__
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["--version"])

        assert result.exit_code == 0
        assert __version__ in result.output


class TestInspectCommand:
    """Tests para 'morphgrasp inspect'."""

    def test_mini_hand(self, runner, mini_urdf):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["inspect", str(mini_urdf)])

        assert result.exit_code == 0, result.output
        assert "2 slots activos" in result.output
        assert "Descendientes: [1, 0]" in result.output
        assert "index_1" in result.output

    def test_without_mapping(self, runner, mini_urdf, tmp_path):
        from py_morphgrasp.cli.main import cli

        urdf_path = tmp_path / "solo" / "lonely.urdf"
        urdf_path.parent.mkdir()
        urdf_path.write_text(mini_urdf.read_text(encoding="utf-8"), encoding="utf-8")

        result = runner.invoke(cli, ["inspect", str(urdf_path)])

        assert result.exit_code == 0
        assert "[WARN]" in result.output
        assert "j2" in result.output

    def test_missing_file(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["inspect", str(tmp_path / "nada.urdf")])

        assert result.exit_code == 2

    def test_malformed_urdf(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        urdf_path = tmp_path / "roto.urdf"
        urdf_path.write_text("<robot name='x'><link name='a'>", encoding="utf-8")
        (tmp_path / "roto.mapping.json").write_text('{"entries": []}', encoding="utf-8")

        result = runner.invoke(cli, ["inspect", str(urdf_path)])

        assert result.exit_code == 1


class TestMutateCommand:
    """Tests para 'morphgrasp mutate'."""

    def test_remove_pinky(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli
        from py_morphgrasp.hand.embodiment import load_embodiment

        result = runner.invoke(
            cli, ["mutate", "--hand", "shadow", "--variation", "remove pinky", "--out", str(tmp_path)]
        )

        assert result.exit_code == 0, result.output
        assert "-5 slots" in result.output
        variant = load_embodiment(tmp_path / "shadow_remove_pinky.urdf")
        assert variant.n_dof == 19
        assert variant.name == "shadow_remove_pinky"

    def test_thumb_refused(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(
            cli, ["mutate", "--hand", "shadow", "--variation", "remove thumb", "--out", str(tmp_path)]
        )

        assert result.exit_code == 1
        assert not list(tmp_path.glob("*.urdf"))

    def test_thumb_allowed(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(
            cli,
            ["mutate", "--hand", "shadow", "--variation", "remove thumb", "--allow-thumb", "--out", str(tmp_path)],
        )

        assert result.exit_code == 0
        assert (tmp_path / "shadow_remove_thumb.mapping.json").exists()

    def test_grid(self, runner, tmp_path):
        """--grid escribe las 16 variantes y cada una vuelve a cargarse."""
        from py_morphgrasp.cli.main import cli
        from py_morphgrasp.hand.embodiment import load_embodiment

        result = runner.invoke(cli, ["mutate", "--hand", "shadow", "--grid", "--out", str(tmp_path)])

        assert result.exit_code == 0, result.output
        assert "16 variantes generadas" in result.output
        assert len(list(tmp_path.glob("*.urdf"))) == 16
        assert load_embodiment(tmp_path / "shadow_remove_pinky.urdf").n_dof == 19
        assert load_embodiment(tmp_path / "shadow_remove_index_ring.urdf").n_dof == 16
        assert load_embodiment(tmp_path / "shadow_baseline.urdf").n_dof == 24

    def test_needs_variation(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["mutate", "--hand", "shadow", "--out", str(tmp_path)])

        assert result.exit_code == 2

    def test_bad_spec(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["mutate", "--hand", "shadow", "--variation", "grow index", "--out", str(tmp_path)])

        assert result.exit_code == 1


class TestToydataCommand:
    def test_writes_manifest(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli
        from py_morphgrasp.data.dataset import load_dataset

        out = tmp_path / "toy"
        result = runner.invoke(cli, ["toydata", "--out", str(out), "--n-grasps", "3", "--cloud-points", "64"])

        assert result.exit_code == 0, result.output
        dataset = load_dataset(out / "manifest.json")
        assert len(dataset) == 3


class TestEncodeCommand:
    def test_toy_gripper(self, runner, tiny_config_file, tmp_path):
        from py_morphgrasp.cli.main import cli

        out = tmp_path / "morph.json"
        result = runner.invoke(
            cli, ["encode", "--hand", "toy_gripper", "--config", str(tiny_config_file), "--out", str(out)]
        )

        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text(encoding="utf-8"))
        assert payload["embodiment"] == "toy_gripper"
        assert payload["tree"]["joint_order"] == ["a1", "a2", "b1", "b2"]
        assert list(payload["tree"]) == ["version", "name", "root_link", "joint_order", "joints", "links"]
        assert sum(payload["delta"]) == 4
        assert np.array(payload["J"]).shape[0] == 24
        assert np.array(payload["M"]).shape == (24, 16)

    def test_needs_hand(self, runner, tmp_path):
        from py_morphgrasp.cli.main import cli

        result = runner.invoke(cli, ["encode", "--out", str(tmp_path / "m.json")])

        assert result.exit_code == 2


class TestTrainCommand:
    """Tests para 'morphgrasp train' con el bucle simulado."""

    @staticmethod
    def _result(tmp_path):
        return {
            "steps": 3,
            "first_loss": 2.5,
            "final_loss": 1.5,
            "checkpoint": tmp_path / "checkpoints" / "latest.ckpt",
            "metrics_log": tmp_path / "metrics.jsonl",
        }

    def test_options_become_overrides(self, runner, mocker, tmp_path):
        from py_morphgrasp.cli.main import cli

        mock_run = mocker.patch(
            "py_morphgrasp.cli.commands.train.run_training", return_value=self._result(tmp_path)
        )

        result = runner.invoke(
            cli, ["train", "--out", str(tmp_path), "--steps", "3", "--seed", "5", "--set", "loss.alpha_srf=0"]
        )

        assert result.exit_code == 0, result.output
        run_config = mock_run.call_args.args[0]
        assert run_config.train.steps == 3
        assert run_config.train.seed == 5
        assert run_config.loss.alpha_srf == 0.0
        assert mock_run.call_args.kwargs["resume"] is False
        assert "1.500000" in result.output

    def test_invalid_override(self, runner, mocker, tmp_path):
        from py_morphgrasp.cli.main import cli

        mock_run = mocker.patch("py_morphgrasp.cli.commands.train.run_training")

        result = runner.invoke(cli, ["train", "--out", str(tmp_path), "--set", "loss.nada=1"])

        assert result.exit_code == 1
        mock_run.assert_not_called()

    def test_numeric_error(self, runner, mocker, tmp_path):
        from py_morphgrasp.cli.main import cli
        from py_morphgrasp.exceptions import NumericError

        mocker.patch(
            "py_morphgrasp.cli.commands.train.run_training",
            side_effect=NumericError("pérdida no finita", where="spf"),
        )

        result = runner.invoke(cli, ["train", "--out", str(tmp_path)])

        assert result.exit_code == 1


class TestSampleAndEvalCommands:
    def test_sample_requires_checkpoint(self, runner, box_grasp_files, tmp_path):
        from py_morphgrasp.cli.main import cli

        _, cloud_path, _ = box_grasp_files
        result = runner.invoke(
            cli, ["sample", "--object", str(cloud_path), "--hand", "toy_gripper", "--out", str(tmp_path / "s")]
        )

        assert result.exit_code == 2

    def test_eval_writes_csv(self, runner, box_grasp_files, tmp_path):
        from py_morphgrasp.cli.main import cli

        poses_path, cloud_path, mesh_path = box_grasp_files
        out = tmp_path / "quality.csv"
        result = runner.invoke(
            cli,
            [
                "eval",
                "--poses", str(poses_path),
                "--object", str(cloud_path),
                "--mesh", str(mesh_path),
                "--hand", "toy_gripper",
                "--out", str(out),
            ],
        )

        assert result.exit_code == 0, result.output
        assert "2 agarres evaluados" in result.output
        assert "Diversidad" in result.output
        assert out.exists()

    def test_eval_wrong_hand(self, runner, box_grasp_files):
        from py_morphgrasp.cli.main import cli

        poses_path, cloud_path, _ = box_grasp_files
        result = runner.invoke(
            cli, ["eval", "--poses", str(poses_path), "--object", str(cloud_path), "--hand", "allegro"]
        )

        assert result.exit_code == 1

    def test_loss_audit(self, runner, box_grasp_files):
        from py_morphgrasp.cli.main import cli

        poses_path, cloud_path, mesh_path = box_grasp_files
        result = runner.invoke(
            cli,
            [
                "loss-audit",
                "--poses", str(poses_path),
                "--object", str(cloud_path),
                "--mesh", str(mesh_path),
                "--hand", "toy_gripper",
            ],
        )

        assert result.exit_code == 0, result.output
        assert "[AUDIT] 2 poses" in result.output
