"""Seeded corpora shared by the acceptance suite and the slower tests."""

import numpy as np

from tornmend.harness import TearSpec

# five tear settings per document: straight and polyline tears, amplitude up
# to 20 px, gaps inside [1, 3] px, noise up to 8, flips on and off
VARIANTS = (
    dict(tear_kind="straight", amplitude=8.0, gap_width=1.0, noise_sigma=0.0, flip_b=False),
    dict(tear_kind="straight", amplitude=16.0, gap_width=3.0, noise_sigma=8.0, flip_b=True),
    dict(tear_kind="polyline", teeth=3, amplitude=12.0, gap_width=2.0, noise_sigma=4.0, flip_b=False),
    dict(tear_kind="polyline", teeth=5, amplitude=20.0, gap_width=1.5, noise_sigma=8.0, flip_b=True),
    dict(tear_kind="straight", amplitude=20.0, gap_width=2.5, noise_sigma=2.0, flip_b=False),
)


def _displacement(rng, reach=40):
    return (int(rng.integers(-reach, reach + 1)), int(rng.integers(-reach, reach + 1)))


def round_trip_specs(documents=10, base_seed=1000):
    """``documents`` x 5 specs; each document is torn five different ways."""
    rng = np.random.default_rng(base_seed)
    specs = []
    for d in range(documents):
        for v, variant in enumerate(VARIANTS):
            seed = base_seed + 10 * d + v
            specs.append(TearSpec(seed=seed, doc_seed=base_seed + d,
                                  displace_b=_displacement(rng), **variant))
    return specs


def gap_sweep_specs(gaps=(0.0, 4.0), per_gap=3, base_seed=5000):
    """Pairs at gap widths outside the calibrated range (informational)."""
    rng = np.random.default_rng(base_seed)
    specs = []
    for gi, g in enumerate(gaps):
        for k in range(per_gap):
            kind = "straight" if k % 2 == 0 else "polyline"
            specs.append(TearSpec(tear_kind=kind, amplitude=12.0, gap_width=g, noise_sigma=4.0,
                                  flip_b=bool(k % 2), displace_b=_displacement(rng),
                                  seed=base_seed + 10 * gi + k))
    return specs
