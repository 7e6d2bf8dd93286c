"""Citation exponential random graph models (cERGM).

Term-by-term models of the citations sent by cases decided in a focal term,
conditional on every earlier citation.
"""
from ._jit import backend
from .config import RunConfig
from .data import Dataset, load_dataset, write_dataset
from .errors import *  # noqa: F401,F403
from .estimation import (
    AnnealControl,
    BridgeControl,
    FitResult,
    McmleControl,
    annealed_start,
    loglik_and_ic,
    mcmle,
    mple,
    standard_errors,
)
from .gof import DegeneracyReport, GofReport, degeneracy_check, gof
from .model import (
    DiffTermTransitiveTies,
    DyadCovariate,
    Edges,
    GwespOSP,
    GwIdegree,
    ModelSpec,
    Mutual,
    ReceiverOutdegree,
    Term,
    UserMatrix,
    full_model,
    independent_model,
)
from .network import CaseAttributes, CitationNetwork, build, toggle
from .pipeline import batch_fit, compare_models, fit_term
from .sampler import McmcControl, SampleSet, conditional_prob, simulate
from .statistics import change_stats, design_matrix, global_stats

__version__ = "0.1.0"
