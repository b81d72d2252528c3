"""Tests for hemo-gnn."""
