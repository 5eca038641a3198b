"""Tone assignment and power allocation simulator for dense small cell links."""

__version__ = "0.1.0"

from .channel import ScenarioConfig, ChannelRealization, drop_topology, pathloss_db, realize_channels
from .signaling import QuantizationTable, SignalPair, GainView, build_cdf_table, encode, decode, run_signaling_slot
from .tssolver import TSProblem, DualIterate, Allocation, SubgradientResult
from .tssolver import dual_score, power_density, dual_value, subgradient_solve, recover_primal, water_fill
from .soa import GreedyState, marginal_rate, assign_channels, soa_allocate
from .baselines import InterferenceAllocation, iwfa_solve, oracle_orthogonal, evaluate_concurrent
from .harness import TrialRecord, SlotState, run_experiment, run_distributed_slots, summarize
