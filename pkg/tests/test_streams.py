import numpy as np
import pytest

from depctl.streams import RandomStream, fnv1a64


def test_same_pair_reproduces_identical_sequence():
    a = RandomStream(42, "alpha").generator.uniform(size=1000)
    b = RandomStream(42, "alpha").generator.uniform(size=1000)
    assert np.array_equal(a, b)


def test_distinct_labels_are_decorrelated():
    a = RandomStream(42, "alpha").generator.standard_normal(100_000)
    b = RandomStream(42, "beta").generator.standard_normal(100_000)
    assert not np.array_equal(a[:100], b[:100])
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


def test_distinct_seeds_are_decorrelated():
    a = RandomStream(1, "x").generator.standard_normal(100_000)
    b = RandomStream(2, "x").generator.standard_normal(100_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


def test_derive_builds_nested_labels():
    s = RandomStream(7, "root")
    child = s.derive("worker-3")
    assert child.stream_label == "root/worker-3"
    assert child.master_seed == 7


def test_counter_advances_with_consumption():
    s = RandomStream(7, "ctr")
    c0 = s.counter
    s.generator.uniform(size=4096)
    assert s.counter > c0


def test_seed_domain_validated():
    with pytest.raises(ValueError):
        RandomStream(-1, "bad")
    with pytest.raises(ValueError):
        RandomStream(2**64, "bad")


def test_fnv_is_stable_and_spreads():
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") != fnv1a64("b")
    # reference vector for FNV-1a 64
    assert fnv1a64("foobar") == 0x85944171F73967E8
