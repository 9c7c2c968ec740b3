import numpy as np
import pytest

from treecca import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # JIT compilation happens once here so timed tests measure steady state
    _kernels.warm_up()


def base3_coloring(index: int, n: int) -> np.ndarray:
    """The index-th of the 3^n colorings of n nodes, as base-3 digits."""
    digits = np.empty(n, dtype=np.uint8)
    for i in range(n):
        digits[i] = index % 3
        index //= 3
    return digits
