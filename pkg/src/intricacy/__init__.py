"""Average sample complexity and intricacy of shifts of finite type."""

from .complexity_engine import (
    JointTable,
    RunOptions,
    SubsetTerms,
    asc_minus_anchored,
    asc_mu,
    asc_mu_minus,
    asc_mu_plus,
    asc_top,
    h_top,
    int_mu,
    int_top,
    mutual_information,
    neural_complexity,
)
from .cover_algebra import CylinderCover, symbol_partition, trivial_cover
from .group_model import CoefficientSystem, LatticeWindow, folner_window
from .measure_entropy import Bernoulli, Markov, cover_entropy, mixture_combine
from .symbolic_space import ShiftSpace, full_shift, golden_mean_shift

__version__ = "0.1.0"
