"""Reference plan, route, and subtree-size computations."""

import random
from fractions import Fraction

import pytest

from mhcl.addrspace import AddressRange
from mhcl.oracle import (NoSuchAddress, oracle_plan, oracle_route,
                         oracle_subtree_sizes, validate_parent_map)


def test_chain_plan_greedy_no_reserve():
    parents = {"a": "root", "b": "a"}
    plan = oracle_plan(parents, "root", AddressRange(0, 256), "greedy", Fraction(0))
    assert plan["root"] == (0, AddressRange(0, 256))
    assert plan["a"] == (1, AddressRange(1, 255))
    assert plan["b"] == (2, AddressRange(2, 254))


def test_star_plan_with_remainder():
    parents = {1: 0, 2: 0}
    plan = oracle_plan(parents, 0, AddressRange(0, 8), "greedy", Fraction(0))
    assert plan[1] == (1, AddressRange(1, 3))
    assert plan[2] == (4, AddressRange(4, 3))
    # one leftover address [7, 8) stays in the root's reserve


def test_single_root():
    plan = oracle_plan({}, 0, AddressRange(0, 256), "greedy")
    assert plan == {0: (0, AddressRange(0, 256))}


def test_route_chain():
    parents = {"a": "root", "b": "a"}
    plan = oracle_plan(parents, "root", AddressRange(0, 256), "greedy", Fraction(0))
    assert oracle_route(parents, plan, 2, "root") == ["root", "a", "b"]
    assert oracle_route(parents, plan, 0, "root") == ["root"]


def test_route_into_reserve_fails():
    parents = {1: 0, 2: 0}
    plan = oracle_plan(parents, 0, AddressRange(0, 8), "greedy", Fraction(0))
    with pytest.raises(NoSuchAddress):
        oracle_route(parents, plan, 7, 0)


def test_subtree_sizes_chain_and_star():
    assert oracle_subtree_sizes({1: 0, 2: 1}, 0) == {0: 3, 1: 2, 2: 1}
    star = {i: 0 for i in range(1, 6)}
    sizes = oracle_subtree_sizes(star, 0)
    assert sizes[0] == 6
    assert all(sizes[i] == 1 for i in range(1, 6))


def test_subtree_sizes_random_trees():
    rng = random.Random(31)
    for _ in range(50):
        n = rng.randrange(2, 170)
        parents = {i: rng.randrange(0, i) for i in range(1, n)}
        sizes = oracle_subtree_sizes(parents, 0)
        roots_children = [i for i, p in parents.items() if p == 0]
        assert 1 + sum(sizes[c] for c in roots_children) == n == sizes[0]


def test_invalid_parent_maps():
    with pytest.raises(ValueError):
        validate_parent_map({1: 2, 2: 1}, 0)   # cycle
    with pytest.raises(ValueError):
        validate_parent_map({1: 99}, 0)        # dangling


def test_aggregate_plan_proportional():
    # root with two children: a leaf and a chain of three
    parents = {1: 0, 2: 0, 3: 2, 4: 3}
    plan = oracle_plan(parents, 0, AddressRange(0, 256), "aggregate", Fraction(0))
    len1 = plan[1][1].length
    len2 = plan[2][1].length
    # subtree sizes 1 vs 3: proportional shares of 255
    assert len2 > len1
    assert len1 + len2 == 255
    assert len1 == 64  # floor(63.75) plus the leftover (larger remainder)


def test_route_matches_depth_random():
    rng = random.Random(77)
    for _ in range(30):
        n = rng.randrange(2, 60)
        parents = {i: rng.randrange(0, i) for i in range(1, n)}
        plan = oracle_plan(parents, 0, AddressRange(0, 65536), "aggregate")
        for node in range(1, n):
            depth = 0
            cursor = node
            while cursor != 0:
                cursor = parents[cursor]
                depth += 1
            path = oracle_route(parents, plan, plan[node][0], 0)
            assert len(path) == depth + 1
            assert path[-1] == node
