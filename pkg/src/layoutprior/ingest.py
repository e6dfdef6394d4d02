"""Corpus loading and saving: native layout JSON and COCO-style imports.

Native corpus format::

    {"classes": ["..."],
     "layouts": [{"id": "...", "width": W, "height": H,
                  "components": [{"bbox": [x1,y1,x2,y2],
                                  "class": "name",
                                  "score": optional}]}]}

``.json.gz`` paths are handled transparently on both read and write.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass

from .core import BBox, ClassVocabulary, Component, LayoutDocument, ParseError


@dataclass(frozen=True)
class Corpus:
    vocabulary: ClassVocabulary
    layouts: tuple
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "layouts", tuple(self.layouts))
        ids = [l.id for l in self.layouts]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ParseError(f"duplicate layout ids in corpus: {dupes}")
        C = self.vocabulary.size
        for layout in self.layouts:
            for comp in layout.components:
                if not (0 <= comp.class_id < C):
                    raise ParseError(
                        f"layout {layout.id!r}: class id {comp.class_id} "
                        f"out of range for {C} classes"
                    )


def _open(path, mode="rt"):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def load_native(path) -> Corpus:
    with _open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"{path}: invalid JSON: {e}") from None
    try:
        classes = obj["classes"]
        layouts_obj = obj["layouts"]
    except (KeyError, TypeError):
        raise ParseError(f"{path}: missing 'classes' or 'layouts'") from None

    vocab = ClassVocabulary(tuple(classes))
    layouts = []
    for lay in layouts_obj:
        lid = lay["id"]
        width, height = float(lay["width"]), float(lay["height"])
        comps = []
        for c in lay.get("components", []):
            name = c["class"]
            try:
                class_id = vocab.index(name)
            except ParseError:
                raise ParseError(
                    f"layout {lid!r}: unknown class name {name!r}"
                ) from None
            x1, y1, x2, y2 = (float(v) for v in c["bbox"])
            if x2 < x1 or y2 < y1:
                raise ParseError(
                    f"layout {lid!r}: malformed box [{x1},{y1},{x2},{y2}]"
                )
            bbox = BBox(x1, y1, x2, y2).clamped(width, height)
            score = c.get("score")
            comps.append(Component(bbox, class_id,
                                   None if score is None else float(score)))
        layouts.append(LayoutDocument(str(lid), width, height, tuple(comps)))
    return Corpus(vocab, tuple(layouts), source=str(path))


def corpus_to_obj(corpus: Corpus) -> dict:
    layouts = []
    for lay in corpus.layouts:
        comps = []
        for c in lay.components:
            entry = {
                "bbox": [c.bbox.x1, c.bbox.y1, c.bbox.x2, c.bbox.y2],
                "class": corpus.vocabulary.names[c.class_id],
            }
            if c.score is not None:
                entry["score"] = c.score
            comps.append(entry)
        layouts.append({"id": lay.id, "width": lay.width, "height": lay.height,
                        "components": comps})
    return {"classes": list(corpus.vocabulary.names), "layouts": layouts}


def save_native(corpus: Corpus, path) -> None:
    with _open(path, "wt") as f:
        json.dump(corpus_to_obj(corpus), f, indent=1, sort_keys=True)
        f.write("\n")


def load_coco(images_path, annotations_path=None) -> Corpus:
    """Load COCO-style detection JSON.

    Accepts either a single file holding images/annotations/categories or
    separate image and annotation files (the annotation file then supplies
    'annotations' and optionally 'categories').
    """
    with _open(images_path) as f:
        obj = json.load(f)
    if annotations_path is not None:
        with _open(annotations_path) as f:
            ann_obj = json.load(f)
        obj = dict(obj)
        obj["annotations"] = ann_obj.get("annotations", ann_obj)
        if "categories" in ann_obj:
            obj["categories"] = ann_obj["categories"]

    try:
        images = obj["images"]
        annotations = obj["annotations"]
        categories = obj["categories"]
    except (KeyError, TypeError):
        raise ParseError(
            "COCO input must provide 'images', 'annotations', 'categories'"
        ) from None

    cats = sorted(categories, key=lambda c: int(c["id"]))
    vocab = ClassVocabulary(tuple(c["name"] for c in cats))
    cat_to_idx = {int(c["id"]): i for i, c in enumerate(cats)}

    img_info = {}
    for im in images:
        img_info[int(im["id"])] = (str(im["id"]), float(im["width"]),
                                   float(im["height"]))
    comps = {iid: [] for iid in img_info}

    for ann in annotations:
        iid = int(ann["image_id"])
        if iid not in img_info:
            raise ParseError(f"annotation references unknown image_id {iid}")
        cid = int(ann["category_id"])
        if cid not in cat_to_idx:
            raise ParseError(f"annotation references unknown category_id {cid}")
        x, y, w, h = (float(v) for v in ann["bbox"])
        if w < 0 or h < 0:
            raise ParseError(
                f"annotation on image {iid} has negative width or height"
            )
        _, W, H = img_info[iid]
        bbox = BBox(x, y, x + w, y + h).clamped(W, H)
        score = ann.get("score")
        comps[iid].append(Component(bbox, cat_to_idx[cid],
                                    None if score is None else float(score)))

    layouts = []
    for iid in sorted(img_info):
        name, W, H = img_info[iid]
        layouts.append(LayoutDocument(name, W, H, tuple(comps[iid])))
    return Corpus(vocab, tuple(layouts), source=str(images_path))
