"""Utilities shared across test modules, chiefly Lorentz boosts.

The library itself never boosts anything; boosts exist only so the
tests can check that the causal predicates are frame-independent.
"""

import math

import numpy as np

from scotsim.minkowski import Event


def boost_event(e: Event, velocity) -> Event:
    """Active Lorentz boost of an event, c = 1, |velocity| < 1."""
    v = np.asarray(velocity, dtype=float)
    if v.shape != (e.dim,):
        raise ValueError(f"velocity shape {v.shape} does not match dim {e.dim}")
    speed2 = float(v @ v)
    if speed2 >= 1.0:
        raise ValueError("speed must be below 1")
    if speed2 == 0.0:
        return e
    g = 1.0 / math.sqrt(1.0 - speed2)
    x = np.asarray(e.x, dtype=float)
    t_new = g * (e.t - float(v @ x))
    x_new = x + ((g - 1.0) * float(v @ x) / speed2 - g * e.t) * v
    return Event(t_new, tuple(float(c) for c in x_new))


def random_velocity(rng, dim: int, max_speed: float = 0.9):
    """Uniform direction, speed uniform in (0, max_speed]."""
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    return direction * (max_speed * (1.0 - rng.random() * 0.999))


def classify(a: Event, b: Event) -> str:
    """Order type of a pair, using the library predicates."""
    from scotsim.minkowski import causally_precedes, spacelike_separated

    fwd = causally_precedes(a, b)
    bwd = causally_precedes(b, a)
    if fwd and bwd:
        return "equal"
    if fwd:
        return "forward"
    if bwd:
        return "backward"
    assert spacelike_separated(a, b)
    return "spacelike"
