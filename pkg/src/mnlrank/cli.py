"""Command-line harness: run experiments, list policies, run check suites."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .checks import SUITES
from .harness import ExperimentConfig, run_experiment
from .policies import POLICY_NAMES


@click.group()
def main() -> None:
    """Learning-to-rank bandit simulations under multinomial-logit choice."""


@main.command("run")
@click.option("--problem", default="a", show_default=True, help="Preset a|b|c or path to a problem JSON file.")
@click.option("--policies", default=",".join(POLICY_NAMES), show_default=True, help="Comma-separated policy names.")
@click.option("--horizon", default=50_000, show_default=True, type=int)
@click.option("--reps", default=40, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", default="results", show_default=True, type=click.Path(file_okay=False))
@click.option("--threads", default=1, show_default=True, type=int)
@click.option("--realized-regret", is_flag=True, help="Record realized-reward regret instead of the expected gap.")
@click.option("--stride", default=1, show_default=True, type=int, help="Write every Nth round to the trajectory CSV.")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False), help="JSON config; explicit flags override its fields.")
def run_cmd(problem, policies, horizon, reps, seed, out_dir, threads, realized_regret, stride, config_path) -> None:
    """Simulate the chosen policies and write trajectory + summary CSVs."""
    fields = {
        "problem": problem,
        "policies": tuple(p.strip() for p in policies.split(",") if p.strip()),
        "horizon": horizon,
        "replications": reps,
        "base_seed": seed,
        "out_dir": out_dir,
        "threads": threads,
        "realized_regret": realized_regret,
        "stride": stride,
    }
    if config_path is not None:
        loaded = json.loads(Path(config_path).read_text())
        source = click.get_current_context().get_parameter_source
        overridable = {
            "problem": "problem", "policies": "policies", "horizon": "horizon",
            "reps": "replications", "seed": "base_seed", "out_dir": "out_dir",
            "threads": "threads", "realized_regret": "realized_regret", "stride": "stride",
        }
        for param, field in overridable.items():
            if field in loaded and source(param).name == "DEFAULT":
                fields[field] = tuple(loaded[field]) if field == "policies" else loaded[field]
    config = ExperimentConfig(**fields)
    result = run_experiment(config)
    for policy in config.policies:
        final = result.final_regrets(policy)
        click.echo(f"{policy}: mean final regret {final.mean():.2f} (sd {final.std():.2f}, {config.replications} reps)")
    click.echo(f"wrote CSVs to {config.out_dir}/")


@main.command("list-policies")
def list_policies_cmd() -> None:
    for name in POLICY_NAMES:
        click.echo(name)


@main.command("check")
@click.option("--suite", type=click.Choice(sorted(SUITES)), required=True)
@click.option("--seed", default=None, type=int, help="Override the suite's fixed seed.")
def check_cmd(suite, seed) -> None:
    """Run a property suite and print one line per check."""
    runner = SUITES[suite]
    outcomes = runner() if seed is None or suite == "theory" else runner(seed=seed)
    for outcome in outcomes:
        click.echo(outcome.line())
    if not all(o.passed for o in outcomes):
        sys.exit(1)


if __name__ == "__main__":
    main()
