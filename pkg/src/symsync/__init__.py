"""Sample-level simulator of symbol-synchronous multi-hop flooding with duty-cycled relays."""

__version__ = "0.1.0"

from .engine import CampaignResult, TrialResult, run_campaign, run_sweep, run_trial
from .errors import ConfigError
from .params import CampaignConfig, PhyParams, build_grid_topology, load_config
from .channel import ChannelParams

__all__ = [
    "CampaignConfig",
    "CampaignResult",
    "ChannelParams",
    "ConfigError",
    "PhyParams",
    "TrialResult",
    "build_grid_topology",
    "load_config",
    "run_campaign",
    "run_sweep",
    "run_trial",
]
