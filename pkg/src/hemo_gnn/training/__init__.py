"""Strided-loss training of the graph network surrogate."""
