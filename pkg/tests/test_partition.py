import numpy as np
import pytest

from instances import random_instance
from sawblock.errors import GraphFormatError
from sawblock.graph import ProbGraph, SuspectSet, random_suspects, synth_graph
from sawblock.partition import (Partitioning, distributed_sample, extend_partition,
                                part_targets, partition_graph, read_partition_file,
                                write_partition_file)


def _two_cliques(size=6):
    src, dst = [], []
    for base in (0, size):
        for a in range(size):
            for b in range(size):
                if a != b:
                    src.append(base + a)
                    dst.append(base + b)
    src.append(0)
    dst.append(size)
    w = [1.0 / size] * len(src)
    return ProbGraph.from_edges(2 * size, src, dst, w)


def test_single_part():
    g = synth_graph(20, 2, 0)
    for method in ("hash", "labelprop"):
        part = partition_graph(g, 1, method)
        assert part.sizes().tolist() == [20]


def test_hash_round_robin():
    g = ProbGraph.from_edges(4, [0, 1, 2], [1, 2, 3], [1.0, 1.0, 1.0])
    part = partition_graph(g, 2, "hash")
    assert part.base(0).tolist() == [0, 2]
    assert part.base(1).tolist() == [1, 3]


def test_labelprop_separates_cliques():
    g = _two_cliques()
    part = partition_graph(g, 2, "labelprop")
    assert sorted(part.base(0).tolist()) in (list(range(6)), list(range(6, 12)))
    assert part.sizes().tolist() == [6, 6]


def test_labelprop_parts_are_balanced():
    g = synth_graph(500, 4, 3)
    for p in (2, 3, 7):
        sizes = partition_graph(g, p, "labelprop").sizes()
        assert sizes.sum() == 500
        assert sizes.max() - sizes.min() <= -(-500 // p)
        assert sizes.max() <= -(-500 // p)


def test_file_method(tmp_path):
    g = synth_graph(5, 2, 0)
    path = tmp_path / "parts.txt"
    path.write_text("0\n1\n1\n0\n1\n")
    part = partition_graph(g, 2, "file", path=path)
    assert part.assign.tolist() == [0, 1, 1, 0, 1]
    out = tmp_path / "out.txt"
    write_partition_file(part, out)
    assert read_partition_file(out, 5, 2).tolist() == [0, 1, 1, 0, 1]


@pytest.mark.parametrize("text", ["0\n1\n", "0\n1\n2\n0\n1\n", "0\nx\n1\n0\n1\n"])
def test_file_errors(tmp_path, text):
    path = tmp_path / "parts.txt"
    path.write_text(text)
    with pytest.raises(GraphFormatError):
        read_partition_file(path, 5, 2)


def test_partition_argument_errors():
    g = synth_graph(5, 2, 0)
    with pytest.raises(ValueError):
        partition_graph(g, 0)
    with pytest.raises(ValueError):
        partition_graph(g, 6)
    with pytest.raises(ValueError):
        partition_graph(g, 2, "file")
    with pytest.raises(ValueError):
        partition_graph(g, 2, "metis")


def test_extend_chain():
    # 0 -> 1 -> 2 -> 3; part 1 holds node 3, whose walks run backwards to 0
    g = ProbGraph.from_edges(4, [0, 1, 2], [1, 2, 3], [1.0, 1.0, 1.0])
    part = Partitioning(2, np.array([0, 0, 0, 1]))
    assert extend_partition(g, part, 0).extended[1].tolist() == [3]
    assert extend_partition(g, part, 1).extended[1].tolist() == [2, 3]
    assert extend_partition(g, part, 5).extended[1].tolist() == [0, 1, 2, 3]
    assert extend_partition(g, part, 5).extended[0].tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        extend_partition(g, part, -1)


def test_extend_is_in_neighbour_closure():
    g = synth_graph(200, 3, 4)
    part = partition_graph(g, 4, "hash")
    one = extend_partition(g, part, 1)
    for i in range(4):
        base = set(part.base(i).tolist())
        want = base | {int(g.edge_src[e]) for e in range(g.m) if int(g.edge_dst[e]) in base}
        assert set(one.extended[i].tolist()) == want


def test_part_targets():
    part = Partitioning(3, np.array([0, 0, 1, 1, 1, 2, 2, 2, 2, 2]))
    assert part_targets(part, 100) == [20, 30, 50]
    assert part_targets(part, 7) == [2, 2, 3]
    assert sum(part_targets(part, 7)) == 7


def test_distributed_single_part_has_no_crossings():
    g, vi = random_instance(60, n=12, m=30, suspects=3)
    part = extend_partition(g, partition_graph(g, 1), 0)
    pool, frac = distributed_sample(g, vi, part, 500)
    assert len(pool) == 500 and frac == 0.0


def test_distributed_disjoint_components():
    # two components that never exchange walks, whatever the hop count
    g = ProbGraph.from_edges(6, [0, 1, 3, 4], [1, 2, 4, 5], [1.0, 1.0, 1.0, 1.0])
    vi = SuspectSet.from_pairs([(0, 0.5), (3, 0.5)], 6)
    part = Partitioning(2, np.array([0, 0, 0, 1, 1, 1]))
    for h in range(3):
        pool, frac = distributed_sample(g, vi, extend_partition(g, part, h), 400, seed=h)
        assert frac == 0.0 and len(pool) == 400


def test_distributed_quotas_and_determinism():
    g = synth_graph(400, 4, 5)
    vi = random_suspects(g, 40, 5)
    part = extend_partition(g, partition_graph(g, 3, "hash"), 1)
    pool, frac = distributed_sample(g, vi, part, 900, seed=2)
    again, frac2 = distributed_sample(g, vi, part, 900, seed=2)
    assert np.array_equal(pool.nodes, again.nodes) and frac == frac2
    assert len(pool) == 900 and 0.0 < frac < 1.0
    targets = part_targets(part, 900)
    starts = part.assign[pool.nodes[pool.offsets[:-1]]]
    assert np.bincount(starts, minlength=3).tolist() == targets
    for i in range(len(pool)):
        h = pool[i]
        assert set(h.nodes) <= set(part.extended[part.assign[h.nodes[0]]].tolist())


def test_distributed_empty_part():
    g = synth_graph(4, 1, 0)
    vi = random_suspects(g, 2, 0)
    part = Partitioning(2, np.array([0, 0, 0, 0]))
    with pytest.raises(ValueError):
        distributed_sample(g, vi, part, 10)
