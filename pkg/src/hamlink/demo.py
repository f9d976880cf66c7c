"""Bundled demonstration problem.

A two-mode system and a three-mode system, each with no Hamiltonian of its
own, joined by a fixed integer interaction matrix of numerical rank three.
Every mode also carries an external damping channel; the damping rate is
large enough to dominate the interaction strength, so the coupled dynamics
are strongly stable and trajectory comparisons are well-conditioned.
"""

from __future__ import annotations

import math

import numpy as np

from .files import Problem
from .lqss import DirectInteraction, LqssParams
from .synth import SynthOptions

__all__ = ["DEMO_R_AB", "DAMPING_RATE", "demo_problem"]

DEMO_R_AB = np.array(
    [
        [4.0, -7.0, 7.0, 0.0, 2.0, 0.0],
        [1.0, -5.0, 5.0, -4.0, 1.0, 5.0],
        [9.0, -6.0, 0.0, 0.0, 2.0, 9.0],
        [12.0, -8.0, 2.0, 4.0, 3.0, 4.0],
    ]
)

# Per-mode energy decay rate of the external channels.  The coupled drift's
# real spectrum sits at -DAMPING_RATE/2 while the interaction contributes
# magnitudes below 23, so the composite is strongly stable.
DAMPING_RATE = 80.0


def demo_problem() -> Problem:
    """Build the bundled problem with default synthesis parameters."""
    amp = math.sqrt(DAMPING_RATE)
    sys_a = LqssParams(
        n=2, r=np.zeros((4, 4)), c=amp * np.eye(4), d=np.eye(4)
    )
    sys_b = LqssParams(
        n=3, r=np.zeros((6, 6)), c=amp * np.eye(6), d=np.eye(6)
    )
    interaction = DirectInteraction(sys_a=sys_a, sys_b=sys_b, r_ab=DEMO_R_AB)
    return Problem(interaction=interaction, options=SynthOptions())
