"""Solver toolkit and simulation harness for energy/cost-aware service chain
embedding on capacitated data-center graphs, miners' task-offloading, and the
smart-contract allocation workflow that ties the two together."""

__version__ = "0.1.0"
