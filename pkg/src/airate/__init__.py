"""Achievable information rates of PM-QAM symbol streams under Gaussian
auxiliary channels: mismatched-decoding MI bounds and bit-wise GMI."""
from .batch import SymbolBatch
from .constellation import Constellation, SymbolView, bits_of, build_qam, make_view
from .estimators import (RateEstimate, compute_llrs, double_monte_carlo, gmi_rate,
                         mi_rate, split_batch)
from .models import (ALL_KINDS, GMI_KINDS, KINDS, AuxChannelModel, ModelFitError,
                     ModelKind, dof, dof_report, fit, get_kind, log_output_density,
                     logpdf, logpdf_all)
from .oracles import true_gmi_oracle, true_rate_oracle
from .sim import ChannelScenario, simulate, simulate_batches
from .sweep import rate_sweep

__version__ = "0.1.0"
