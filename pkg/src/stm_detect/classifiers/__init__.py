from ._base import BinaryClassifier, DimensionError
from .extratrees import ExtraTrees, gini, gini_gain
from .io import ModelFormatError, ModelKindError, load_model, read_model, save_model, write_model
from .knn import KNN
from .svm import SVM, ConvergenceWarning, rbf_kernel, scale_gamma

CLASSIFIERS = {"svm": SVM, "knn": KNN, "extratrees": ExtraTrees}

__all__ = [
    "BinaryClassifier", "DimensionError", "ExtraTrees", "KNN", "SVM", "CLASSIFIERS",
    "ConvergenceWarning", "ModelFormatError", "ModelKindError", "gini", "gini_gain",
    "load_model", "read_model", "rbf_kernel", "save_model", "scale_gamma", "write_model",
]
