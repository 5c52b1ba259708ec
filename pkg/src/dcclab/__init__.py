"""Average deterministic communication capacity of interference-limited uplinks
at finite blocklength, under different levels of signal and interference
power knowledge."""

from .asymptotes import (Asymptote, SLOPE, asymptote_const_signal, asymptote_dd, asymptote_for_case,
                         asymptote_id, asymptote_ii, sinr_gap)
from .closed_form import c1_series, c2_series, theorem1_closed_form
from .distributions import (ALL_CASES, CognitionCase, Deterministic, EipMixture, EipParams,
                            FadingLink, InverseGamma, MixtureInverseGamma, MixtureScaledF, ScaledF,
                            aggregate_eip, level_a_eip, level_m_mixture, project_sinr,
                            sample_gamma_power, sinr_cdf, sinr_pdf)
from .engine import (DccResult, avg_bler, avg_dcc_adaptive, avg_dcc_signal_instant,
                     projected_rate, solve_fixed_rate)
from .errors import (AccuracyError, CaseError, ContractError, DccError, DegenerateInputError,
                     DomainError, InfeasibleQosError, ParameterError, SizeError)
from .fbl import QosSpec, dispersion_awgn, dispersion_ngn, inst_bler, inst_rate
from .scenario import (LayoutSpec, PowerSpec, Scenario, generate, monte_carlo_actual, path_loss_db,
                       tx_power_dbm)
from .special import (Accuracy, digamma, gauss_2f1, inv_q, lambert_w0, ln_beta, ln_gamma, q_func,
                      reg_inc_beta, reg_upper_gamma)

__version__ = "0.1.0"
