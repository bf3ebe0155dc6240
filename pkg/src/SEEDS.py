import random

import numpy as np


def set_seed(SEED: int) -> None:
    """
    Set a global random seed for NumPy's legacy generator and Python's 'random' module.

    Simulation code draws from explicit generators (see `make_rng`); the global seed
    only pins anything that still relies on module-level state.

    Args:
        SEED (int): The seed value to set for all random number generators.
    """
    np.random.seed(SEED)
    random.seed(SEED)


def make_rng(seed: int) -> np.random.Generator:
    """
    Build an independent, seeded NumPy Generator.

    Args:
        seed (int): Seed of the run.

    Returns:
        np.random.Generator: A PCG64-backed generator; identical seeds give identical streams.
    """
    return np.random.default_rng(seed)
