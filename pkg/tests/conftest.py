import numpy as np
import pytest

from dermkit.classify import ClassifierTrainConfig, default_taxonomy, \
    predict as member_predict, train_baseline
from dermkit.ensemble import FusionTrainConfig, train_fusion
from dermkit.imaging import ImageBuffer, default_distortion_grid
from dermkit.quality import QualityTrainConfig, train_quality_model
from dermkit.synth import clean_corpus, labeled_corpus


def checkerboard(size: int = 64, cell: int = 4, low: int = 40, high: int = 215) -> ImageBuffer:
    ys, xs = np.mgrid[0:size, 0:size]
    pattern = ((ys // cell + xs // cell) % 2).astype(np.uint8)
    plane = np.where(pattern == 1, high, low).astype(np.uint8)
    return ImageBuffer(np.stack([plane] * 3, axis=-1))


@pytest.fixture(scope="session")
def quality_model():
    corpus = clean_corpus(60, size=64, seed=0)
    return train_quality_model(corpus, default_distortion_grid(), QualityTrainConfig(seed=0))


@pytest.fixture(scope="session")
def trained_members():
    """Two seven-class member classifiers plus a fusion head over them."""
    taxonomy = default_taxonomy()
    data = labeled_corpus(per_class=4, n_classes=7, size=64, seed=50)
    m1 = train_baseline(data, taxonomy, ClassifierTrainConfig(epochs=120, seed=0))
    m2 = train_baseline(data, taxonomy, ClassifierTrainConfig(epochs=120, seed=9))
    val = labeled_corpus(per_class=3, n_classes=7, size=64, seed=9100)
    fold = [([member_predict(m1, img), member_predict(m2, img)], label)
            for img, label in val]
    fusion = train_fusion(fold, FusionTrainConfig(epochs=150, seed=0, hidden_width=16),
                          member_order=("m1", "m2"))
    return m1, m2, fusion
