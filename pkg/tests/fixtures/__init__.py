"""Test fixtures: frozen identifier vectors."""
