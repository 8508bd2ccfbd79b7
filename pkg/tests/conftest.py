import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from linsched.plan import TransferRequest
from linsched.trace import CarbonTrace, PathSpec, SlotGrid

T0 = datetime(2024, 3, 1, tzinfo=timezone.utc)


def make_request(rid, gigabits, deadline, zones=("A", "B")):
    """Request sized in Gbit rather than bytes, which keeps slot arithmetic exact."""
    return TransferRequest(rid, gigabits / 8 * 1e9, deadline, PathSpec.equal(list(zones)))


def slot_bits(limit, grid, slots=1.0):
    """Gbit carried by ``slots`` full slots at ``limit`` Gbps."""
    return limit * grid.slot_seconds * slots


@pytest.fixture
def grid4():
    return SlotGrid(900.0, 4)


@pytest.fixture
def zone_traces():
    rng = np.random.default_rng(7)
    return {
        z: CarbonTrace(z, T0, rng.uniform(50, 600, size=6))
        for z in ("A", "B", "C")
    }
