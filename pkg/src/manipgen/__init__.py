"""Trajectory-controlled video generation for 2D robotic manipulation at desk scale."""

__version__ = "0.1.0"
