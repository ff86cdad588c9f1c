"""Two-panel regret figures from harness CSV output.

The left panel shows the mean cumulative-regret trajectory per policy, the
right panel the distribution (boxplot) of final-round regret across
replications.  Input is the long-format trajectory CSV written by the
simulation harness: columns problem, policy, replication, round, cum_regret.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = {"problem", "policy", "replication", "round", "cum_regret"}

# stable colors for the seven stock policies; anything else falls back to a cycle
POLICY_STYLES = {
    "epoch-ucb": "tab:blue",
    "epoch-ucb-w": "tab:cyan",
    "epoch-ucb-upb": "tab:orange",
    "epoch-ucb-star-upb": "tab:red",
    "mnl-bandit": "tab:green",
    "toprank": "tab:purple",
    "pbucb": "tab:brown",
}
FALLBACK_COLORS = ("tab:gray", "tab:olive", "tab:pink", "black")


@dataclass
class PlotSpec:
    trajectory_csvs: list[str | Path]
    out_path: str | Path
    problem_label: str | None = None
    panels: str = "both"  # both | trajectory | distribution
    colors: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.panels not in ("both", "trajectory", "distribution"):
            raise ValueError(f"unknown panel layout {self.panels!r}")
        if not self.trajectory_csvs:
            raise ValueError("need at least one trajectory CSV")


def load_trajectories(paths) -> tuple[str, dict[tuple[str, int], dict[int, float]]]:
    """Read one or more trajectory CSVs into per-replication series.

    Rows are deduplicated on (policy, replication, round), so concatenated
    copies of the same run aggregate to the same figure.
    """
    series: dict[tuple[str, int], dict[int, float]] = {}
    problem = None
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not REQUIRED_COLUMNS.issubset(reader.fieldnames):
                raise ValueError(
                    f"{path}: expected columns {sorted(REQUIRED_COLUMNS)}, got {reader.fieldnames}"
                )
            for row in reader:
                problem = row["problem"]
                key = (row["policy"], int(row["replication"]))
                series.setdefault(key, {})[int(row["round"])] = float(row["cum_regret"])
    if not series:
        raise ValueError(f"no data rows found in {list(paths)}")
    return problem, series


def mean_trajectories(series) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-policy (rounds, mean cumulative regret) across replications."""
    policies: dict[str, list[dict[int, float]]] = {}
    for (policy, _), points in series.items():
        policies.setdefault(policy, []).append(points)
    out = {}
    for policy, reps in policies.items():
        rounds = sorted(set().union(*reps))
        table = np.array([[rep[r] for r in rounds] for rep in reps])
        out[policy] = np.array(rounds), table.mean(axis=0)
    return out


def final_regrets(series) -> dict[str, np.ndarray]:
    """Per-policy final-round values, one entry per replication."""
    finals: dict[str, dict[int, float]] = {}
    for (policy, rep), points in series.items():
        finals.setdefault(policy, {})[rep] = points[max(points)]
    return {
        policy: np.array([values[rep] for rep in sorted(values)])
        for policy, values in finals.items()
    }


def _color_for(policy: str, index: int, overrides: dict[str, str]) -> str:
    if policy in overrides:
        return overrides[policy]
    if policy in POLICY_STYLES:
        return POLICY_STYLES[policy]
    return FALLBACK_COLORS[index % len(FALLBACK_COLORS)]


def build_figure(spec: PlotSpec):
    """Assemble the figure for a spec; rendering to disk is ``render``'s job."""
    problem, series = load_trajectories(spec.trajectory_csvs)
    label = spec.problem_label or problem
    means = mean_trajectories(series)
    finals = final_regrets(series)
    policies = list(means)

    n_panels = 2 if spec.panels == "both" else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(5.5 * n_panels, 4.2), dpi=150, squeeze=False)
    axes = axes[0]
    panel = 0
    if spec.panels in ("both", "trajectory"):
        ax = axes[panel]
        for index, policy in enumerate(policies):
            rounds, mean = means[policy]
            ax.plot(rounds, mean, label=policy, color=_color_for(policy, index, spec.colors))
        ax.set_xlabel("rounds")
        ax.set_ylabel("cumulative regret")
        ax.set_title(f"problem ({label}): mean cumulative regret")
        ax.legend(fontsize=8)
        panel += 1
    if spec.panels in ("both", "distribution"):
        ax = axes[panel]
        data = [finals[policy] for policy in policies]
        boxes = ax.boxplot(data, tick_labels=policies, patch_artist=True)
        for index, (policy, patch) in enumerate(zip(policies, boxes["boxes"])):
            patch.set_facecolor(_color_for(policy, index, spec.colors))
            patch.set_alpha(0.5)
        ax.set_ylabel("cumulative regret at final round")
        ax.set_title(f"problem ({label}): final-round regret")
        ax.tick_params(axis="x", rotation=45, labelsize=8)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> Path:
    """Write the figure; output bytes depend only on the input CSV content."""
    fig = build_figure(spec)
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    # strip the writer's software tag so identical inputs give identical bytes
    fig.savefig(out, metadata={"Software": None})
    plt.close(fig)
    return out
