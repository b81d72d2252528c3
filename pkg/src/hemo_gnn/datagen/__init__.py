"""Synthetic geometries, boundary-condition perturbations and dataset generation."""
