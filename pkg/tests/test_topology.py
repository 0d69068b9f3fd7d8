import pytest
from hypothesis import given
from hypothesis import strategies as st

from iabslice.errors import DomainError, InvalidTopologyError
from iabslice.topology import CORE, Direction, Link, LinkKind, Topology, build_topology

DL, UL = Direction.DL, Direction.UL


def test_default_topology_shape():
    topo = build_topology(7, 1000, 1000)
    assert len(topo.nodes) == 8
    kinds = [link.kind for link in topo.links.values()]
    assert kinds.count(LinkKind.WIRED) == 7
    assert kinds.count(LinkKind.WIRELESS) == 6


def test_minimal_topology():
    topo = build_topology(2, 1000, 1000)
    assert len(topo.nodes) == 3
    assert len(topo.links) == 3


@pytest.mark.parametrize("n", [1, 0, -3])
def test_too_few_stations(n):
    with pytest.raises(InvalidTopologyError):
        build_topology(n)


def test_link_validation():
    with pytest.raises(InvalidTopologyError):
        Link(LinkKind.WIRED, 2, 2, 10, 10)
    with pytest.raises(InvalidTopologyError):
        Link(LinkKind.WIRED, 2, 0, -1, 10)


def test_zero_loads_leave_full_capacity():
    topo = build_topology()
    topo.set_bs_loads({k: (0, 0) for k in range(2, 8)})
    for k in range(2, 8):
        link = topo.link(1, k)
        assert topo.residual(link, DL) == 1000
        assert topo.residual(link, UL) == 1000


def test_saturated_donor():
    topo = build_topology()
    topo.set_bs_loads({2: (1000, 1000)})
    assert topo.path_residual(2) == (0.0, 0.0)


def test_partial_load_arithmetic():
    topo = build_topology()
    topo.set_bs_loads({3: (600, 400)})
    link = topo.link(1, 3)
    assert (topo.residual(link, DL), topo.residual(link, UL)) == (400, 600)


def test_load_errors():
    topo = build_topology()
    with pytest.raises(DomainError):
        topo.set_bs_loads({2: (-1, 0)})
    with pytest.raises(DomainError):
        topo.set_bs_loads({9: (1, 1)})
    with pytest.raises(DomainError):
        topo.set_bs_loads({2: (1001, 0)})


def test_candidate_paths():
    topo = build_topology()
    assert topo.candidate_path(1) == (topo.link(1, CORE),)
    assert topo.candidate_path(5) == (topo.link(1, 5), topo.link(5, CORE))
    with pytest.raises(DomainError):
        topo.candidate_path(9)


def test_residual_with_load_and_allocation():
    topo = build_topology()
    assert topo.residual(topo.link(1, 0), DL) == 1000
    topo.set_bs_loads({2: (600, 0)})
    assert topo.try_allocate(1, 2, 150, 0, 0)
    assert topo.residual(topo.link(1, 2), DL) == 250


def test_residual_clamps_at_zero():
    topo = build_topology()
    topo.set_bs_loads({2: (1000, 1000)})
    assert topo.residual(topo.link(2, 0), DL) == 0.0


def test_residual_rejects_foreign_link():
    topo = build_topology()
    with pytest.raises(DomainError):
        topo.residual(Link(LinkKind.WIRED, 1, 0, 5, 5), DL)


def test_accept_then_residuals():
    topo = build_topology()
    assert topo.try_allocate(1, 1, 200, 100, 0)
    assert topo.path_residual(1) == (800, 900)


def test_reject_oversized_leaves_state():
    topo = build_topology()
    before = topo.snapshot()
    result = topo.try_allocate(1, 1, 1200, 100, 0)
    assert not result and result.allocation is None
    assert topo.snapshot() == before


def test_wired_hop_binds():
    base = build_topology()
    links = dict(base.links)
    links[(1, 3)] = Link(LinkKind.WIRELESS, 1, 3, 300, 300)
    links[(3, 0)] = Link(LinkKind.WIRED, 3, 0, 250, 400)
    topo = Topology(dict(base.nodes), links)
    topo.set_bs_loads({})
    assert topo.path_residual(3) == (250, 300)
    assert not topo.try_allocate(1, 3, 260, 100, 0)
    assert topo.active_allocations == []


def test_bottleneck_is_the_minimum_over_the_path():
    topo = build_topology(3, wired_mbps=250, wireless_mbps=400)
    assert topo.path_residual(3) == (250, 250)
    assert not topo.try_allocate(1, 3, 260, 100, 0)
    assert topo.try_allocate(1, 3, 250, 100, 0)


def test_release():
    topo = build_topology()
    topo.try_allocate(1, 1, 500, 500, 0)
    topo.release_interval()
    assert topo.residual(topo.link(1, 0), DL) == 1000
    fresh = build_topology()
    fresh.release_interval()
    assert fresh.snapshot() == build_topology().snapshot()


def test_accept_reject_release_is_reversible():
    loads = {2: (100, 200), 5: (300, 50)}
    topo = build_topology()
    topo.set_bs_loads(loads)
    topo.try_allocate(1, 2, 400, 400, 0)
    topo.try_allocate(2, 2, 900, 0, 0)
    topo.release_interval()
    ref = build_topology()
    ref.set_bs_loads(loads)
    assert topo.snapshot() == ref.snapshot()


def test_negative_demand():
    with pytest.raises(DomainError):
        build_topology().try_allocate(1, 1, -1, 0, 0)


load = st.tuples(st.floats(0, 1000), st.floats(0, 1000))
request = st.tuples(st.integers(1, 7), st.floats(0, 1200), st.floats(0, 1200))


@given(st.dictionaries(st.integers(2, 7), load), st.lists(request, max_size=12))
def test_allocation_invariants(loads, requests):
    topo = build_topology()
    topo.set_bs_loads(loads)
    for s, (choice, dl, ul) in enumerate(requests):
        before = {(link.key, d): topo.residual(link, d) for link in topo.links.values() for d in (DL, UL)}
        snap = topo.snapshot()
        result = topo.try_allocate(s, choice, dl, ul, 0)
        after = {(link.key, d): topo.residual(link, d) for link in topo.links.values() for d in (DL, UL)}
        if result:
            path = result.allocation.link_path
            assert path[-1].target == CORE
            assert len(path) == (1 if choice == 1 else 2)
            assert all(after[k] <= before[k] for k in before)
        else:
            assert topo.snapshot() == snap
            assert after == before
        # capacity conservation
        for link in topo.links.values():
            for d in (DL, UL):
                used = topo._access_load(link, d) + sum(
                    a.demand(d) for a in topo.active_allocations if link in a.link_path
                )
                assert used <= link.capacity(d) + 1e-9
    topo.release_interval()
    once = topo.snapshot()
    topo.release_interval()
    assert topo.snapshot() == once
