"""CLI for rendering regret figures from harness CSV directories."""

from __future__ import annotations

from pathlib import Path

import click

from .figures import PlotSpec, render


@click.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False), help="Directory holding <problem>_trajectories.csv files.")
@click.option("--problem", default="a", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False), help="Output image path [default: fig_<problem>.png].")
@click.option("--panel", default="both", show_default=True, type=click.Choice(["both", "trajectory", "distribution"]))
def main(in_dir, problem, out_path, panel) -> None:
    """Render the two-panel regret figure for one problem."""
    csv_path = Path(in_dir) / f"{problem}_trajectories.csv"
    if not csv_path.exists():
        raise click.ClickException(f"no trajectory CSV for problem {problem!r} under {in_dir}")
    out = Path(out_path) if out_path else Path(f"fig_{problem}.png")
    spec = PlotSpec([csv_path], out, problem_label=problem, panels=panel)
    written = render(spec)
    click.echo(f"wrote {written}")


if __name__ == "__main__":
    main()
