"""Workbench for policies that modulate parametric trajectory generators.

Modules:
    tg         - gait phase math and open-loop trajectory shapes
    policy     - feed-forward policies, observation/action layouts
    pointmass  - synthetic 2D curve-tracking task
    quadruped  - reduced-order planar quadruped simulator
    optim      - ARS and PPO trainers plus the shared rollout executor
    config     - experiment configuration schema (YAML)
    cli        - train / eval / compare / export-plots / print-config
"""

__version__ = "0.1.0"
