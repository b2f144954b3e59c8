import numpy as np
import pytest

import snapseq as s


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_sequence(dim, n_blocks, rng, alpha_scale=1.0):
    alphas = rng.uniform(-alpha_scale, alpha_scale, n_blocks)
    thetas = rng.uniform(-np.pi, np.pi, (n_blocks, dim))
    return s.BlockSequence(dim, alphas, thetas)


def random_target(dim, logical_dim, seed):
    """Unitary target on the lowest `logical_dim` Fock levels."""
    v = s.random_unitary(logical_dim, seed)
    return s.fock_subspace_unitary(v, list(range(logical_dim)), dim)


def sequence_matrix(seq):
    """Dense product matrix of a block sequence (test oracle only)."""
    out = np.eye(seq.dim, dtype=complex)
    for alpha, theta in seq.blocks():
        out = s.build_block(alpha, theta) @ out
    return out
