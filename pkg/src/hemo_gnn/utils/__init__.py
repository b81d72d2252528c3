"""Utility modules for hemo-gnn."""
