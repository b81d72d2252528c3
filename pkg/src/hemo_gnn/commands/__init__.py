"""Subcommands of the hemo-gnn CLI."""
