import numpy as np
import pytest

from layoutprior import (BBox, ClassVocabulary, Component, Corpus,
                         LayoutDocument)

FIXTURES = __file__.rsplit("/", 1)[0] + "/fixtures"


def make_layout(lid, boxes, class_ids, height=100.0, width=100.0, scores=None):
    comps = []
    for i, (box, cid) in enumerate(zip(boxes, class_ids)):
        score = None if scores is None else scores[i]
        comps.append(Component(BBox(*box), cid, score))
    return LayoutDocument(lid, width, height, tuple(comps))


def random_corpus(rng, n_layouts=5, max_boxes=20, n_classes=4, height=100.0):
    vocab = ClassVocabulary(tuple(f"c{i}" for i in range(n_classes)))
    layouts = []
    for li in range(n_layouts):
        n = int(rng.integers(0, max_boxes + 1))
        comps = []
        for _ in range(n):
            y = rng.uniform(0, height)
            x = rng.uniform(0, 100)
            h = rng.uniform(1, 20)
            w = rng.uniform(1, 20)
            box = BBox(x, y, min(x + w, 100.0), min(y + h, height))
            comps.append(Component(box, int(rng.integers(n_classes))))
        layouts.append(LayoutDocument(f"l{li}", 100.0, height, tuple(comps)))
    return Corpus(vocab, tuple(layouts))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def three_box_corpus():
    """Hand-trace fixture: A and B share band 0, C is alone in band 1."""
    vocab = ClassVocabulary(("A", "B", "C"))
    layout = make_layout("l1", [(0, 5, 10, 15), (0, 15, 10, 25),
                                (0, 75, 10, 85)], [0, 1, 2])
    return Corpus(vocab, (layout,))
