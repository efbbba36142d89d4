"""
Unit tests for the terrain mapping pipeline.
Tests individual components on small hand-built grids and scenes.
"""
