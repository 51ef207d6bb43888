"""Unit tests for ensim."""
