"""Deterministic seed derivation.

Every random choice in the toolkit flows from one user-supplied base seed.
Sub-seeds are derived by feeding (base, part, part, ...) counter tuples into
numpy's SeedSequence, so trial streams are reproducible and independent of
execution order.
"""

from __future__ import annotations

import numpy as np


def derive_seed(*parts: int) -> int:
    """Collapse nonnegative integer components into a single 32-bit seed."""
    seq = np.random.SeedSequence([int(p) for p in parts])
    return int(seq.generate_state(1)[0])


def derive_rng(*parts: int) -> np.random.Generator:
    """Generator seeded from the given component tuple."""
    return np.random.default_rng(np.random.SeedSequence([int(p) for p in parts]))
