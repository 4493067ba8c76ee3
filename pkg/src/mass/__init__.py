"""Kinodynamic multi-agent motion planning on 4-connected grids."""
from .domain import GridWorld, KinodynamicLimits, Orientation, Plan
from .mapf import Agent, Instance, PlannerConfig, solve

__all__ = ["GridWorld", "KinodynamicLimits", "Orientation", "Plan", "Agent", "Instance",
           "PlannerConfig", "solve"]
