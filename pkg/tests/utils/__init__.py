"""
Test utilities for the terrain mapping tests.
Provides reference oracles and grid assertions.
"""
