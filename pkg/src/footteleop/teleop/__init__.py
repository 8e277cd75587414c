from .channel import ChannelConfig, DelayLine, channel_transmit
from .contact import FrictionContact, GraspObject, ObjectState, TableSupport, contact_force, penetration
from .metrics import MetricsReport, compute_metrics, rmse
from .scenario import (
    PHASE_GROUPS,
    PHASE_LABELS,
    ImpulseTrain,
    ScenarioConfig,
    ScenarioError,
    ScenarioPhase,
    SideConfig,
    SimTrace,
    TelefunctioningPair,
    run_scenario,
)
from .config_file import ScenarioParseError, bundled_scenario_path, load_scenario, parse_scenario
