"""The archive unit: one simulated test case and its verdicts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EvaluationRecord:
    """One evaluated test input.

    ``objectives`` keeps the user-facing orientation (e.g. a distance to
    be minimized and a speed to be maximized); the search works on a
    separately stored minimization view.
    """

    index: int
    values: np.ndarray
    objectives: tuple[float, ...]
    critical: bool
    metadata: dict[str, str] = field(default_factory=dict)
