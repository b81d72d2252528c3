"""hemo-gnn - Graph neural network surrogates for one-dimensional hemodynamics."""

from importlib.metadata import version, PackageNotFoundError

try:
    __version__ = version("hemo-gnn")
except PackageNotFoundError:
    __version__ = "0.0.0"
