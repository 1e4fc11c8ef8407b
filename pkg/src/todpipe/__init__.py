"""Session-level task-oriented dialog pipeline toolkit."""

__version__ = "0.1.0"
