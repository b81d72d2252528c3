"""Rollout errors, sensitivity, ablation and comparison studies, and their reports."""
