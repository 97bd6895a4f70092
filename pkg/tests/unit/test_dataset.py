"""Tests unitarios para el dataset de agarres y su formato en disco."""

import json

import numpy as np
import pytest


class TestGraspDataset:
    """Tests para GraspDataset en memoria."""

    def test_pose_matrix_shape(self, toy_dataset):
        from py_morphgrasp.hand.canonical import POSE_DIM

        matrix = toy_dataset.pose_matrix()

        assert matrix.shape == (6, POSE_DIM)
        assert len(toy_dataset) == 6

    def test_split_keeps_only_listed_objects(self, toy_dataset):
        from py_morphgrasp.data.dataset import GraspDataset

        first = toy_dataset.object_ids[0]
        dataset = GraspDataset(
            embodiments=toy_dataset.embodiments,
            objects=toy_dataset.objects,
            records=toy_dataset.records,
            splits={"train": toy_dataset.object_ids[1:], "test": [first]},
        )

        test = dataset.split("test")

        assert len(test) == 2
        assert all(r.object == 0 for r in test.records)
        assert len(dataset.split("train")) == 4

    def test_unknown_split(self, toy_dataset):
        with pytest.raises(KeyError):
            toy_dataset.split("validation")

    def test_unknown_embodiment_name(self, toy_dataset):
        assert toy_dataset.embodiment_index("toy_gripper") == 0
        with pytest.raises(KeyError):
            toy_dataset.embodiment_index("shadow")

    def test_validate_reports_record_index(self, toy_dataset):
        """Un registro con la máscara de otra mano se señala por su índice."""
        from py_morphgrasp.data.dataset import GraspDataset, GraspRecord
        from py_morphgrasp.exceptions import DatasetValidationError
        from py_morphgrasp.hand.canonical import CanonicalPose

        good = toy_dataset.records[0].pose
        bad_delta = good.delta.copy()
        bad_delta[10] = 1
        bad = GraspRecord(
            embodiment=0,
            object=0,
            pose=CanonicalPose.from_vector(good.to_vector(), bad_delta),
        )
        dataset = GraspDataset(
            embodiments=toy_dataset.embodiments,
            objects=toy_dataset.objects,
            records=[toy_dataset.records[0], toy_dataset.records[1], bad],
        )

        with pytest.raises(DatasetValidationError) as ex:
            dataset.validate()

        assert ex.value.record_index == 2

    def test_validate_rejects_masked_angles(self, toy_dataset):
        from py_morphgrasp.data.dataset import GraspDataset, GraspRecord
        from py_morphgrasp.exceptions import DatasetValidationError
        from py_morphgrasp.hand.canonical import CanonicalPose

        pose = toy_dataset.records[0].pose
        vector = pose.to_vector()
        vector[9 + 12] = 0.3  # slot 12 está enmascarado en la pinza
        record = GraspRecord(embodiment=0, object=0, pose=CanonicalPose.from_vector(vector, pose.delta))
        dataset = GraspDataset(toy_dataset.embodiments, toy_dataset.objects, [record])

        with pytest.raises(DatasetValidationError, match="enmascarados") as ex:
            dataset.validate()

        assert ex.value.record_index == 0

    def test_validate_rejects_unknown_object(self, toy_dataset):
        from py_morphgrasp.data.dataset import GraspDataset, GraspRecord
        from py_morphgrasp.exceptions import DatasetValidationError

        record = GraspRecord(embodiment=0, object=99, pose=toy_dataset.records[0].pose)
        dataset = GraspDataset(toy_dataset.embodiments, toy_dataset.objects, [record])

        with pytest.raises(DatasetValidationError, match="inexistente"):
            dataset.validate()


class TestRecordsFile:
    """Tests para la tabla binaria de registros."""

    def test_round_trip(self, toy_dataset, tmp_path):
        from py_morphgrasp.data.dataset import read_records, write_records

        path = write_records(toy_dataset.records, tmp_path / "records.bin", ["toy_gripper"], toy_dataset.object_ids)
        records = read_records(path)

        assert [r.object for r in records] == [r.object for r in toy_dataset.records]
        np.testing.assert_array_equal(
            np.stack([r.pose.to_vector() for r in records]), toy_dataset.pose_matrix()
        )
        np.testing.assert_array_equal(records[0].pose.delta, toy_dataset.records[0].pose.delta)

    def test_unknown_schema(self, tmp_path):
        from py_morphgrasp.data.dataset import read_records
        from py_morphgrasp.exceptions import DatasetValidationError

        path = tmp_path / "records.bin"
        path.write_bytes(json.dumps({"schema": "otra/9", "n_rows": 0}).encode("utf-8") + b"\n")

        with pytest.raises(DatasetValidationError, match="Esquema"):
            read_records(path)

    def test_truncated_body(self, toy_dataset, tmp_path):
        from py_morphgrasp.data.dataset import read_records, write_records
        from py_morphgrasp.exceptions import DatasetValidationError

        path = write_records(toy_dataset.records, tmp_path / "records.bin", ["toy_gripper"], toy_dataset.object_ids)
        path.write_bytes(path.read_bytes()[:-5])

        with pytest.raises(DatasetValidationError, match="bytes"):
            read_records(path)


class TestManifest:
    """Tests para save_dataset / load_dataset."""

    def test_save_and_load(self, toy_dataset, tmp_path):
        from py_morphgrasp.data.dataset import load_dataset, save_dataset

        manifest_path = save_dataset(toy_dataset, tmp_path / "toy")
        loaded = load_dataset(manifest_path)

        assert loaded.object_ids == toy_dataset.object_ids
        assert loaded.splits == toy_dataset.splits
        assert [e.name for e in loaded.embodiments] == ["toy_gripper"]
        np.testing.assert_array_equal(loaded.pose_matrix(), toy_dataset.pose_matrix())
        assert all(obj.has_mesh for obj in loaded.objects)

    def test_builtin_hands_stored_by_name(self, toy_dataset, tmp_path):
        from py_morphgrasp.data.dataset import save_dataset

        manifest_path = save_dataset(toy_dataset, tmp_path / "toy")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

        assert manifest["embodiments"] == [{"name": "toy_gripper"}]
        assert not (tmp_path / "toy" / "hands").exists()

    def test_custom_hand_written_next_to_manifest(self, mini_urdf, small_box, tmp_path):
        from py_morphgrasp.data.dataset import GraspDataset, load_dataset, save_dataset
        from py_morphgrasp.hand.embodiment import load_embodiment

        embodiment = load_embodiment(mini_urdf)
        dataset = GraspDataset(embodiments=[embodiment], objects=[small_box], splits={"train": [small_box.name]})

        manifest_path = save_dataset(dataset, tmp_path / "custom")
        loaded = load_dataset(manifest_path)

        assert (tmp_path / "custom" / "hands" / "mini.urdf").exists()
        assert loaded.embodiments[0].mapping.slot_of == embodiment.mapping.slot_of
        assert len(loaded) == 0

    def test_missing_cloud(self, toy_dataset, tmp_path):
        from py_morphgrasp.data.dataset import load_dataset, save_dataset

        manifest_path = save_dataset(toy_dataset, tmp_path / "toy")
        (tmp_path / "toy" / "objects" / f"{toy_dataset.object_ids[0]}.xyz").unlink()

        with pytest.raises(FileNotFoundError):
            load_dataset(manifest_path)
