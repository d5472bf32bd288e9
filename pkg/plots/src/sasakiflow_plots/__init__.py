"""Offline figures from sasakiflow run artifacts (CSV / JSONL / JSON)."""

from .figures import FigureSpec, plot_decay, plot_profile, plot_spectrum, plot_sweep

__version__ = "0.1.0"
