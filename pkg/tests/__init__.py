"""
Test package for the terrain mapping pipeline.
Covers geometry, fusion, inference, traversability, evaluation and the CLI.
"""
