"""
Command-line interface: run, eval, ablate, synth and plan.
"""

from .commands import CLIError, TerrainCLI, cli

__all__ = ["CLIError", "TerrainCLI", "cli"]
