"""
Test fixtures for the terrain mapping tests.
Provides small synthetic scenes and hand-built map snapshots.
"""
