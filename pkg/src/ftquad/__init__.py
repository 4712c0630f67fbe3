"""Fault-tolerant quadruped locomotion laboratory.

Subpackages by concern:

- ``simcore``   rigid-body quadruped simulator (floating base + PD joints)
- ``terrain``   procedural heightfields and the terrain curriculum
- ``faults``    joint fault models and the failure curriculum
- ``nn``        from-scratch MLP / Adam / diagonal-Gaussian toolkit
- ``femnet``    failure-aware state estimator (variational, FiLM-modulated)
- ``env``       vectorized partially-observed locomotion environment
- ``ppo``       asymmetric actor-critic PPO trainer
- ``evalkit``   scenario evaluation, tracking-error metrics, diagnostics
- ``config``    strict YAML run/scenario parsing
- ``cli``       command-line entry point (train / eval / serve)
- ``server``    live websocket telemetry and steering
"""

__version__ = "0.1.0"

__all__ = [
    "checkpoint",
    "cli",
    "config",
    "env",
    "evalkit",
    "faults",
    "femnet",
    "nn",
    "ppo",
    "quat",
    "server",
    "simcore",
    "terrain",
]
