"""SSVEP frequency recognition with CCA, TRCA and adaptive TRCA."""

__version__ = "0.1.0"

from .core import Dataset, Trial, centralize, prepare, select_channels, window
from .reference import build_dictionary, build_template
from .cca import cca_classify, cca_rho
from .trca import TrcaModel, trca_classify, trca_fit
from .ard import ArdConfig, ArdModel, MtlProblem, ard_fit, build_problem, marginal_log_likelihood, temporal_filter
from .adtrca import AdTrcaModel, adtrca_classify, adtrca_fit
from .evaluation import BenchConfig, accuracy, itr, leave_one_block_out, run_benchmark
from .synth import SynthConfig, generate
