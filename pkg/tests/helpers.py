"""Random instance builders shared by the test modules."""

import random

from dyntree import ExampleMultiset, make_example


def random_set(rng: random.Random, n: int, d: int = 2, classes: int = 2, real: bool = False,
               grid: int = 6, c: float = 1.0) -> ExampleMultiset:
    """``n`` examples on a coarse integer grid (so duplicates and ties occur)."""
    S = ExampleMultiset()
    for _ in range(n):
        x = [rng.randrange(grid) for _ in range(d)]
        if real:
            y = round(rng.uniform(-c, c), 3)
        else:
            y = rng.randrange(classes)
        S.add(make_example(x, y))
    return S


def random_instance(rng: random.Random, n_max: int = 200, d_max: int = 5):
    """(S, kind-name) with the size/dimension/label ranges used by the split checks."""
    n = rng.randint(1, n_max)
    d = rng.randint(1, d_max)
    real = rng.random() < 0.3
    grid = rng.choice([2, 3, 5, 10, 40])
    S = random_set(rng, n, d, classes=rng.randint(1, 4), real=real, grid=grid)
    return S, real


def perturb(rng: random.Random, S: ExampleMultiset, edits: int, d: int, classes: int = 2,
            real: bool = False, grid: int = 6) -> ExampleMultiset:
    """Apply ``edits`` random single-element inserts/deletes to a copy of ``S``."""
    T = S.copy()
    for _ in range(edits):
        if len(T) and rng.random() < 0.5:
            ex = rng.choice(list(T.items()))[0]
            T.remove(ex)
        else:
            x = [rng.randrange(grid) for _ in range(d)]
            y = round(rng.uniform(-1, 1), 3) if real else rng.randrange(classes)
            T.add(make_example(x, y))
    return T
