"""Scenario files bundled with the package (loaded by name)."""
