import numpy as np
import pytest

import warpbasis as wb


@pytest.fixture(scope="session")
def rule():
    return wb.default_rule()


@pytest.fixture(scope="session")
def base():
    return wb.BasisSpec(max_index=32)


@pytest.fixture(scope="session")
def five_maps():
    """Identity, one scaling-with-shift map, and three seeded random
    residual maps with Lipschitz budget 0.5."""
    out = [wb.identity_map(), wb.MapSpec(blocks=(wb.AffineBlock(2.0, 1.0),))]
    for seed in (1, 2, 3):
        out.append(wb.MapSpec(blocks=(wb.ResidualBlock(wb.random_net(8, 0.5, seed=seed)),)))
    return out


def random_chain(rng: np.random.Generator) -> wb.MapSpec:
    """A random 1-3 block chain mixing affine and residual blocks."""
    blocks = []
    for _ in range(int(rng.integers(1, 4))):
        if rng.random() < 0.5:
            blocks.append(wb.AffineBlock(alpha=float(rng.uniform(0.5, 2.0)),
                                         beta=float(rng.uniform(-1.0, 1.0))))
        else:
            lip = float(rng.choice([0.3, 0.5, 0.7]))
            blocks.append(wb.ResidualBlock(wb.random_net(
                hidden=int(rng.integers(4, 9)), lipschitz=lip,
                seed=int(rng.integers(0, 10_000)))))
    return wb.MapSpec(blocks=tuple(blocks))
