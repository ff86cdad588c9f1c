"""Benchmark problem registry.

Presets (a), (b) and (c) are the three simulation benchmarks: (a) has
monotone position biases, (b) and (c) deliberately non-monotone ones (the
second-best slot is not slot 2), which defeats rankers that assume slots
decay in prominence.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import ProblemInstance

PRESETS: dict[str, dict] = {
    "a": {
        "alpha": (0.3, 0.28, 0.26, 0.24, 0.22, 0.2),
        "biases": (1.0, 0.3, 0.2, 0.1),
    },
    "b": {
        "alpha": (0.05, 0.1, 0.15, 0.2),
        "biases": (1.0, 0.2, 0.9),
    },
    "c": {
        "alpha": (1.0,) * 4 + (0.8,) * 2 + (0.1,) * 24,
        "biases": (1.0, 0.9, 0.7, 0.3, 0.5, 0.7),
    },
}


def problem_instance(name_or_path: str, horizon: int) -> ProblemInstance:
    """Build an instance from a preset name ("a"/"b"/"c") or a JSON file.

    A problem file holds {"alpha": [...], "biases": [...]}.
    """
    if name_or_path in PRESETS:
        spec = PRESETS[name_or_path]
    else:
        path = Path(name_or_path)
        if not path.exists():
            raise ValueError(f"unknown problem {name_or_path!r}: not a preset and not a file")
        spec = json.loads(path.read_text())
        for key in ("alpha", "biases"):
            if key not in spec:
                raise ValueError(f"problem file {path} is missing {key!r}")
    alpha = tuple(spec["alpha"])
    biases = tuple(spec["biases"])
    return ProblemInstance(
        n_items=len(alpha),
        n_slots=len(biases),
        alpha=alpha,
        biases=biases,
        horizon=horizon,
    )
