"""Transient electromagnetic scattering from bodies of revolution.

Two backends compute the same transient response: a frequency-domain
method-of-moments solver whose response is synthesized into time by FFT,
and an explicit marching-on-in-time solver.
"""
from .runner import ScenarioResult, run_scenario
from .scenarios import Scenario, builtin_names, load_scenario, parse_scenario

__all__ = ["Scenario", "ScenarioResult", "builtin_names", "load_scenario", "parse_scenario",
           "run_scenario"]
__version__ = "0.1.0"
