from .client import ClientReport, ClientState, TrainingError, client_round, predictive_entropy
from .config import COMPONENTS, ConfigError, RunConfig, load_config, parse_config
from .federation import FederationResult, RoundRecord, build_clients, evaluate_global, run_federation
from .server import aggregate_entropy, aggregate_fedavg, entropy_weights, fedavg_weights

__all__ = [
    "COMPONENTS",
    "ClientReport",
    "ClientState",
    "ConfigError",
    "FederationResult",
    "RoundRecord",
    "RunConfig",
    "TrainingError",
    "aggregate_entropy",
    "aggregate_fedavg",
    "build_clients",
    "client_round",
    "entropy_weights",
    "evaluate_global",
    "fedavg_weights",
    "load_config",
    "parse_config",
    "predictive_entropy",
    "run_federation",
]
