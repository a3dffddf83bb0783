"""Federated subgraph learning under label noise: FedRGL and a FedAvg baseline."""

__version__ = "0.1.0"
