"""Coverage-directed repair of nondeterministic value generators."""

__version__ = "0.1.0"
