"""Band-partitioned co-occurrence priors for UI layout detection."""

__version__ = "0.1.0"

from .core import (BBox, ClassVocabulary, Component, LayoutDocument,
                   LayoutPriorError, ParseError, ProposalBatch, ShapeError,
                   iou, load_matrix, matmul, row_softmax, save_matrix)
from .ingest import Corpus, load_coco, load_native, save_native
from .prior import (BandConfig, BandSet, CoOccurrenceGraphSet, accumulate,
                    band_membership, build_prior, load_graphs, make_bands,
                    normalize, save_graphs)
from .conditioning import (AssociationKind, AssociationPolicy, ConditioningConfig,
                           MappingPolicy, NodeFeatures, NodeKind,
                           band_association, concat_features, condition_features,
                           proposal_node_features, soft_mapping)
from .rescore import RescoreConfig, labels_to_logits, rescore, rescore_corpus
from .evaluation import EvalConfig, EvalReport, evaluate, match, precision_recall
from .synth import GeneratorSpec, generate, recovery_score
from .render import render_layout_svg
