import sys
from pathlib import Path

import numpy as np
import pytest

from wolfsearch.enrollment import EnrollmentSet, Template

ORACLE_DIR = Path(__file__).parent / "oracles"


def oracle_command(name, *args):
    """argv list for one of the oracle test doubles."""
    return (sys.executable, str(ORACLE_DIR / name), *args)


def toy_enrollment(n_identities=4, items=2, dim=3, seed=0, name="toy"):
    """Small random enrollment set for matcher and evaluation tests."""
    rng = np.random.Generator(np.random.PCG64(seed))
    templates = []
    for i in range(n_identities):
        center = rng.standard_normal(dim) * 2.0
        for j in range(items):
            templates.append(
                Template(f"id_{i:04d}", f"item_{j:02d}", center + 0.1 * rng.standard_normal(dim))
            )
    return EnrollmentSet(name, dim, templates)


@pytest.fixture
def tmp_out(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out
