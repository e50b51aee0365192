import numpy as np
import pytest

import ebm


def stroke_images(count, seed, size=28):
    """Deterministic grayscale images of 2-3 soft line strokes each.

    Stands in for handwritten-digit data: heavy pixel correlations, sparse
    ink, reproducible from the seed alone.
    """
    rng = ebm.Rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    out = np.zeros((count, size, size))
    for i in range(count):
        n_strokes = 2 + rng.below(2)
        img = np.zeros((size, size))
        for _ in range(n_strokes):
            p = rng.uniform(4) * (size - 8) + 4
            x0, y0, x1, y1 = p
            dx, dy = x1 - x0, y1 - y0
            l2 = max(dx * dx + dy * dy, 1e-9)
            t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / l2, 0.0, 1.0)
            d2 = (xx - (x0 + t * dx)) ** 2 + (yy - (y0 + t * dy)) ** 2
            img = np.maximum(img, np.exp(-d2 / 2.0))
        out[i] = img
    return np.rint(255 * out).astype(np.uint8)


def oriented_stroke_images(count, seed, size=28):
    """Two-class variant: class 0 near-horizontal strokes, class 1 vertical."""
    rng = ebm.Rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    out = np.zeros((count, size, size))
    labels = np.zeros(count, dtype=np.int64)
    for i in range(count):
        label = rng.below(2)
        labels[i] = label
        img = np.zeros((size, size))
        for _ in range(2):
            c0, c1, span = rng.uniform(3)
            mid = 6 + c0 * (size - 12)
            off = 6 + c1 * (size - 12)
            half = 6 + span * 6
            if label == 0:
                x0, x1, y0, y1 = off - half, off + half, mid, mid
            else:
                x0, x1, y0, y1 = mid, mid, off - half, off + half
            dx, dy = x1 - x0, y1 - y0
            l2 = max(dx * dx + dy * dy, 1e-9)
            t = np.clip(((xx - x0) * dx + (yy - y0) * dy) / l2, 0.0, 1.0)
            d2 = (xx - (x0 + t * dx)) ** 2 + (yy - (y0 + t * dy)) ** 2
            img = np.maximum(img, np.exp(-d2 / 2.0))
        out[i] = img
    return np.rint(255 * out).astype(np.uint8), labels


def random_small_rbm(m, n, seed, scale=1.0, **config_kwargs):
    """RBM with Normal(0, scale**2) weights/biases for enumeration tests."""
    model = ebm.Rbm(ebm.RbmConfig(m, n, seed=seed, **config_kwargs))
    gen = ebm.Rng(seed ^ 0x5EED)
    model.W = gen.normal(m * n, std=scale).reshape(m, n)
    model.a = gen.normal(m, std=scale)
    model.b = gen.normal(n, std=scale)
    return model


@pytest.fixture(scope="session")
def image_corpus(tmp_path_factory):
    """IDX files with 1000 training and 200 held-out stroke images."""
    root = tmp_path_factory.mktemp("corpus")
    imgs = stroke_images(1200, seed=20260809)
    train = root / "train-images.idx"
    test = root / "test-images.idx"
    ebm.write_idx_images(imgs[:1000], train)
    ebm.write_idx_images(imgs[1000:], test)
    return {"train": train, "test": test}


@pytest.fixture(scope="session")
def train_data(image_corpus):
    return ebm.binarize(ebm.load_idx_images(image_corpus["train"]), 0.5)


@pytest.fixture(scope="session")
def test_data(image_corpus):
    return ebm.binarize(ebm.load_idx_images(image_corpus["test"]), 0.5)


@pytest.fixture()
def tiny_binary_data():
    """200 binarized 6x6 samples for fast fit tests."""
    gen = ebm.Rng(404)
    raw = gen.uniform(200 * 36).reshape(200, 36)
    return ebm.binarize(ebm.DatasetHandle(raw, feature_shape=(6, 6)), 0.5)
