"""Independent oracles shared by the unit and acceptance suites."""
import numpy as np


def dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def brute_force_fronts(objectives) -> list[list[int]]:
    """O(m^2 * M) front peeling by direct pairwise comparison."""
    remaining = list(range(len(objectives)))
    fronts = []
    while remaining:
        front = []
        for i in remaining:
            if not any(dominates(objectives[j], objectives[i])
                       for j in remaining if j != i):
                front.append(i)
        fronts.append(front)
        remaining = [i for i in remaining if i not in front]
    return fronts


def random_population(rng, max_size=200, n_objectives=None):
    size = int(rng.integers(1, max_size + 1))
    m = int(n_objectives or rng.integers(2, 5))
    # duplicated rows exercise the non-dominance of equal vectors
    base = rng.random((size, m))
    if size > 3 and rng.random() < 0.5:
        base[size // 2] = base[0]
    return np.round(base, 2)
