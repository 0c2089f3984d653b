"""Downlink simulator for cell-free and clustered cell-free massive MIMO.

Sequential resource allocation: enhanced subset greedy multiuser scheduling
under equal power loading, followed by gradient-ascent power allocation,
evaluated with analytic log-det sum-rates under ZF or MMSE precoding.
"""

from .channel import (ChannelModelParams, ChannelRealization, NetworkLayout,
                      draw_channel, generate_layout, large_scale_coeff,
                      path_loss_db, propagation_constant_db, subchannel)
from .errors import (ConfigError, DegenerateScalingError, NumericalError,
                     PowerBudgetError, ResourceCapError, SimulationError,
                     SingularChannelError)
from .pipeline import (RunConfig, RunRecord, RunRow, aggregate, run_network,
                       run_sweep, signaling_load)
from .power import GaTrace, epl_allocate, ga_allocate, gradient_d, objective_x, rescale_eta
from .precoding import (Precoder, SystemParams, assemble, equal_power_loading,
                        mmse_weights, zf_weights)
from .rates import (RateReport, cf_sum_rate, cluster_covariance,
                    cluster_sum_rate, simplified_sum_rate,
                    total_clustered_rate, uniform_combiner)
from .scheduling import (ScheduleResult, ScheduleState, channel_power,
                         es_schedule, esg_schedule, greedy_first_stage,
                         next_swap, selection_rate, sg_schedule)

__version__ = "0.1.0"
