from __future__ import annotations

import numpy as np
import pytest

from sinr.graph import build_graph

# Two dense 4-node blocks joined by the single edge (3, 4). Node 3's edges
# split 3:1 between the blocks and node 4's split 1:2, which makes the
# expected community-share rows easy to read off by hand.
TWO_BLOCK_EDGES = [
    (0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3),
    (3, 4), (4, 5), (4, 7), (5, 6), (5, 7), (6, 7),
]
TWO_BLOCK_ASSIGNMENT = np.array([0, 0, 0, 0, 1, 1, 1, 1])


@pytest.fixture
def two_block_graph():
    return build_graph(8, {e: 1.0 for e in TWO_BLOCK_EDGES})
