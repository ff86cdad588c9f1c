"""Figure renderer for regret-simulation CSVs."""

from .figures import PlotSpec, build_figure, final_regrets, load_trajectories, mean_trajectories, render

__version__ = "0.1.0"
