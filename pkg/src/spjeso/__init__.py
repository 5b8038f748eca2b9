"""Joint edge server deployment and service placement under uncertainty.

``model`` holds the scenario types, ``costs`` every cost formula, ``streams``
the per-slot information generator, ``spco`` the online placement and
offloading controller, ``maied`` the deployment search, ``oracle`` the
brute-force references and ``harness`` the experiment runner.
"""

from .model import (CostBreakdown, DeploymentDecision, NetworkSnapshot, Scenario,
                    ScenarioError, TacticalDecision, default_scenario, load_scenario)

__all__ = ["CostBreakdown", "DeploymentDecision", "NetworkSnapshot", "Scenario",
           "ScenarioError", "TacticalDecision", "default_scenario", "load_scenario"]
__version__ = "0.1.0"
