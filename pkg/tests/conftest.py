import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from popgames import builtin, make_protocol, run
from popgames.sim import InteractionGraph


def cycle3_protocol():
    """Three states where interactions against q0 chase each other in a cycle:
    q0 meets q0 -> q1, q1 meets q0 -> q2, q2 meets q0 -> q0 (mirrored), all
    other pairs identity.  The canonical non-realizable symmetric protocol."""
    return make_protocol(
        "cycle3",
        ["q0", "q1", "q2"],
        [
            ("q0", "q0", "q1", "q1"),
            ("q1", "q0", "q2", "q0"),
            ("q0", "q1", "q0", "q2"),
            ("q2", "q0", "q0", "q0"),
            ("q0", "q2", "q0", "q0"),
        ],
    )


@pytest.fixture(scope="session")
def kernels_warm():
    """Compile the hot kernels once so timed tests measure steady state."""
    pd = builtin("pavlov-pd")
    maj = builtin("majority")
    run(pd, {"D": 3}, seed=0, max_steps=50, stop="silent")
    run(pd, {"D": 3}, seed=0, max_steps=50, stop="silent",
        graph=InteractionGraph.ring(3))
    run(maj, {"0": 2, "1": 1}, seed=0, max_steps=5, stop=("window", 2))
    run(pd, {"D": 3}, seed=0, max_steps=5, stop=("target", {"C": 3}))
    return True


@pytest.fixture()
def cycle3():
    return cycle3_protocol()
