"""teachkit: demonstrate visual states, train an on-demand classifier, bind
states to scene snapshots, and live-test the resulting trigger-action
prototype."""

from .classify import (
    ClassifierModel,
    Prediction,
    SmootherConfig,
    SmootherState,
    StateClass,
    StateEvent,
    TrainingSet,
    evaluate,
    predict,
    smooth,
    train_auto,
    train_knn,
    train_softmax,
)
from .errors import TeachkitError
from .project import Project, load_project, new_project, save_keyed_scene, save_project
from .states import StateRuntime, StateSet, TriggerBinding, staggered_param
from .vision import Embedding, Frame, decode_frame, embed, import_embeddings, resize_bilinear

__version__ = "0.1.0"

__all__ = [
    "ClassifierModel",
    "Embedding",
    "Frame",
    "Prediction",
    "Project",
    "SmootherConfig",
    "SmootherState",
    "StateClass",
    "StateEvent",
    "StateRuntime",
    "StateSet",
    "TeachkitError",
    "TrainingSet",
    "TriggerBinding",
    "decode_frame",
    "embed",
    "evaluate",
    "import_embeddings",
    "load_project",
    "new_project",
    "predict",
    "resize_bilinear",
    "save_keyed_scene",
    "save_project",
    "smooth",
    "staggered_param",
    "train_auto",
    "train_knn",
    "train_softmax",
    "__version__",
]
