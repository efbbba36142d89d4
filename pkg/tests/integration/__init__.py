"""
Integration tests for the terrain mapping pipeline.
Tests whole sequences, the ablation harness and the command line.
"""
