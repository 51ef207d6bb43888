"""Integration tests for ensim: whole runs, CLI and the HTTP facade."""
