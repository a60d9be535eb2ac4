"""Heat-wave interface coupling: solvers, interface equations and regularity experiments."""

__version__ = "0.1.0"
