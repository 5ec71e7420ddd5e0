"""Planning toolkit for robot teams with individual and collaborative LTLf tasks."""

__version__ = "0.1.0"
