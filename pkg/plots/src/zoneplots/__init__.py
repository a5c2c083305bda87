"""Offline figure generation for adaptive-zoning experiment outputs."""

from .render import FigureSpec, RenderError, render, render_loss_curves, render_mesh_history, render_profiles

__version__ = "0.1.0"
