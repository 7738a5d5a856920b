"""Hybrid quantum repeater built on dispersive light-matter interactions.

Modules
-------
densmat
    Density matrices, Kraus channels and measurements for up to four qubits.
entangle
    Coherent-pulse entanglement distribution with homodyne post-selection.
czgate
    Loss model of the measurement-free C-Z gate and its Kraus channel.
cqed
    Optical Bloch equations for the atom-cavity interaction and material presets.
repeater
    Monte-Carlo simulation of nested purification and entanglement swapping.
cli
    Command-line experiments emitting CSV or JSON data.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree without install
    __version__ = "0.1.0"
