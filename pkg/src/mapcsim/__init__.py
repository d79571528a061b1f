"""mapcsim: multi-AP coordinated spatial reuse scheduling simulator.

Library layers, bottom up: topology -> channel -> groups -> traffic ->
mac -> schedulers -> env/protocol -> experiment/report. The CLI front
end lives in mapcsim.cli.
"""

from .channel import (
    ChannelParams,
    ChannelRealization,
    McsTable,
    PhyParams,
    data_rate,
    path_loss_db,
    realize_channel,
    select_mcs,
    sinr,
    sinr_db,
)
from .config import ScenarioConfig, World, build_episode, build_world, scenario_from_dict, scenario_to_dict
from .env import EnvStep, MapcEnv, MaskedActionError, build_observation, reward_longterm, reward_shaping
from .experiment import ExperimentConfig, experiment_from_dict, run_experiment
from .groups import GroupCatalog, SrGroup, UnusableLinkError, admit_group, build_catalog, enumerate_candidates, single_tx_rate
from .mac import (
    ContentionState,
    Episode,
    EpisodeResult,
    MacParams,
    TxopOutcome,
    advance_episode,
    ampdu_size,
    collision_penalty,
    run_txop,
    txop_overhead,
)
from .metrics import EpisodeMetrics, compute_metrics, discard_rule, percentile, priority_histogram
from .protocol import EnvClient, EnvServer, ProtocolError
from .schedulers import (
    HEURISTICS,
    SchedulerState,
    aged_backlog_cleared,
    alignment_spread,
    get_scheduler,
    online_mask,
    schedule_mnp,
    schedule_op,
    schedule_tat,
)
from .topology import Deployment, DeploymentConfig, Room, generate_deployment, row_layout
from .traffic import BURSTY, POISSON, ArrivalStream, StaQueue, TrafficProfile

__version__ = "0.1.0"
