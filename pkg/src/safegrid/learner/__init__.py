from .batch import Batch, make_batch
from .config import LearnerConfig
from .features import Featurizer
from .nets import MLP, log_softmax, sigmoid
from .plain import PlainSAC
from .sac import LearnerUsageError, NumericalError, SafetySAC, actor_objective

__all__ = [
    "Batch", "make_batch", "LearnerConfig", "Featurizer", "MLP", "log_softmax", "sigmoid",
    "PlainSAC", "LearnerUsageError", "NumericalError", "SafetySAC", "actor_objective",
]
