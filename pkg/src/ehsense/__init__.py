"""Decentralized detection with energy-harvesting sensors.

Battery depletion, Bhattacharyya-distance design of sensor thresholds,
exact MAP fusion error, and a Monte Carlo simulator to check them.
"""

from .battery import INF, BatteryParams, build_chain, depletion_probability, steady_state
from .design import GridSpec, optimize_constrained, optimize_unconstrained
from .errors import DegenerateObjectiveError, InvalidParameterError, NetworkSizeError
from .metrics import (
    ChannelModel,
    SensorDesign,
    bd_upper_bound,
    bhattacharyya,
    channel_output_pmf,
    constrained_bd,
    kailath_bound,
    unconstrained_bd,
)
from .network import NetworkScenario, joint_pmf, map_error_probability, total_bd
from .observation import RayleighRician, TableModel, density, sample, tail_probabilities

__version__ = "0.1.0"
