import struct

import numpy as np
import pytest

import ebm
from ebm.dataset import (MODE_BINARIZED, MODE_RAW, MODE_STANDARDIZED,
                         DatasetHandle, binarize, load_idx_images,
                         load_idx_labels, standardize, standardize_with,
                         write_idx_images, write_idx_labels)
from ebm.errors import FormatError, InvalidStateError
from ebm.math import Rng


def test_idx_image_round_trip(tmp_path):
    path = tmp_path / "img.idx"
    src = np.array([[[0, 255], [0, 255]]], dtype=np.uint8)
    write_idx_images(src, path)
    d = load_idx_images(path)
    assert d.samples.shape == (1, 4)
    assert np.array_equal(d.samples, [[0.0, 1.0, 0.0, 1.0]])
    assert d.feature_shape == (2, 2)
    assert d.mode == MODE_RAW


def test_idx_image_bad_magic(tmp_path):
    path = tmp_path / "bad.idx"
    path.write_bytes(struct.pack(">IIII", 2052, 1, 1, 1) + b"\x00")
    with pytest.raises(FormatError):
        load_idx_images(path)


def test_idx_image_truncated(tmp_path):
    path = tmp_path / "short.idx"
    path.write_bytes(struct.pack(">IIII", 2051, 2, 2, 2) + b"\x00" * 5)
    with pytest.raises(FormatError):
        load_idx_images(path)


def test_idx_labels_round_trip(tmp_path):
    path = tmp_path / "labels.idx"
    write_idx_labels([3, 1, 4], path)
    assert list(load_idx_labels(path)) == [3, 1, 4]


def test_idx_labels_empty(tmp_path):
    path = tmp_path / "empty.idx"
    write_idx_labels([], path)
    assert load_idx_labels(path).shape == (0,)


def test_idx_labels_wrong_record_type(tmp_path):
    path = tmp_path / "wrong.idx"
    path.write_bytes(struct.pack(">II", 2051, 0))
    with pytest.raises(FormatError):
        load_idx_labels(path)


def test_handle_validation():
    with pytest.raises(ValueError):
        DatasetHandle(np.zeros((2, 4)), feature_shape=(3, 3))
    with pytest.raises(ValueError):
        DatasetHandle(np.zeros((2, 4)), labels=[1, 2, 3])


def test_samples_are_read_only():
    d = DatasetHandle(np.zeros((2, 4)))
    with pytest.raises(ValueError):
        d.samples[0, 0] = 1.0


class TestBinarize:
    def test_threshold_rule(self):
        d = DatasetHandle(np.array([[0.6, 0.5, 0.4]]))
        out = binarize(d, 0.5)
        assert np.array_equal(out.samples, [[1.0, 0.0, 0.0]])
        assert out.mode == MODE_BINARIZED

    def test_all_zero_fixed_point(self):
        d = DatasetHandle(np.zeros((2, 3)))
        assert not binarize(d, 0.5).samples.any()

    def test_double_binarize_rejected(self):
        d = binarize(DatasetHandle(np.zeros((1, 2))), 0.5)
        with pytest.raises(InvalidStateError):
            binarize(d, 0.5)

    def test_threshold_bounds(self):
        d = DatasetHandle(np.zeros((1, 2)))
        for t in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                binarize(d, t)

    def test_labels_carried(self):
        d = DatasetHandle(np.zeros((2, 2)), labels=[0, 1])
        assert list(binarize(d).labels) == [0, 1]


class TestStandardize:
    def test_two_point_column(self):
        d = DatasetHandle(np.array([[0.0], [1.0]]))
        out, mean, std = standardize(d)
        assert np.allclose(out.samples, [[-1.0], [1.0]])
        assert mean[0] == 0.5 and std[0] == 0.5
        assert out.mode == MODE_STANDARDIZED

    def test_constant_column_floored(self):
        d = DatasetHandle(np.full((3, 2), 0.25))
        out, _, std = standardize(d)
        assert not out.samples.any()
        assert (std == 1e-6).all()

    def test_zero_mean(self):
        gen = Rng(4)
        d = DatasetHandle(gen.uniform(50 * 7).reshape(50, 7))
        out, _, _ = standardize(d)
        assert np.abs(out.samples.mean(axis=0)).max() < 1e-9

    def test_reuse_statistics(self):
        gen = Rng(5)
        train = DatasetHandle(gen.uniform(40).reshape(10, 4))
        test = DatasetHandle(gen.uniform(20).reshape(5, 4))
        _, mean, std = standardize(train)
        out = standardize_with(test, mean, std)
        assert np.allclose(out.samples, (test.samples - mean) / std)

    def test_wrong_mode_rejected(self):
        d = binarize(DatasetHandle(np.zeros((2, 2))))
        with pytest.raises(InvalidStateError):
            standardize(d)


class TestBatches:
    def test_sizes_without_shuffle(self):
        d = DatasetHandle(np.arange(20.0).reshape(10, 2) / 20.0)
        sizes = [len(v) for v, _ in d.batches(4)]
        assert sizes == [4, 4, 2]
        stacked = np.vstack([v for v, _ in d.batches(4)])
        assert np.array_equal(stacked, d.samples)

    def test_oversized_batch(self):
        d = DatasetHandle(np.zeros((10, 2)))
        assert [len(v) for v, _ in d.batches(16)] == [10]

    def test_zero_batch_rejected(self):
        d = DatasetHandle(np.zeros((4, 2)))
        with pytest.raises(ValueError):
            list(d.batches(0))

    def test_shuffle_is_seeded(self):
        d = DatasetHandle(np.arange(30.0).reshape(15, 2) / 30.0)
        a = np.vstack([v for v, _ in d.batches(4, shuffle=True, rng=Rng(6))])
        b = np.vstack([v for v, _ in d.batches(4, shuffle=True, rng=Rng(6))])
        assert np.array_equal(a, b)
        c = np.vstack([v for v, _ in d.batches(4, shuffle=True, rng=Rng(7))])
        assert not np.array_equal(a, c)

    def test_shuffle_preserves_multiset(self):
        d = DatasetHandle(np.arange(24.0).reshape(12, 2) / 24.0)
        out = np.vstack([v for v, _ in d.batches(5, shuffle=True, rng=Rng(1))])
        assert np.array_equal(np.sort(out[:, 0]), np.sort(d.samples[:, 0]))

    def test_labels_follow_samples(self):
        d = DatasetHandle(np.arange(8.0).reshape(4, 2) / 8.0, labels=[3, 1, 2, 0])
        pairs = [(row[0], label) for v, y in d.batches(3, shuffle=True, rng=Rng(9))
                 for row, label in zip(v, y)]
        expected = {(d.samples[i, 0], d.labels[i]) for i in range(4)}
        assert set(pairs) == expected


def test_with_labels_length_mismatch():
    d = DatasetHandle(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        d.with_labels([1, 2])
