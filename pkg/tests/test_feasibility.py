from collections import deque

import networkx as nx
import numpy as np
import pytest

from utils import planner
from utils.feasibility import (
    check_use_case, connected_components, critical_elements, diagnose_scenario,
    survivability_report
)
from utils.planner import DesignProblem, UseCase
from utils.topology import (
    Country, DiagnosticCode, Link, LinkStatus, NetworkTopology, Node, NodeKind,
    admissible_subgraph
)


def chain_topology(names, closed=False, country='A'):
    nodes = [Node(n, country, NodeKind.RELAY, 45.0 + 0.1 * i, 10.0) for i, n in enumerate(names)]
    pairs = list(zip(names, names[1:]))
    if closed:
        pairs.append((names[-1], names[0]))
    links = [Link(a + b, a, b, 100.0) for a, b in pairs]
    return NetworkTopology([Country(country, country)], nodes, links)


def bfs_reachable(view, source, sink):
    adjacency = {}
    for link in view.links(existing_only=True):
        adjacency.setdefault(link.a, []).append(link.b)
        adjacency.setdefault(link.b, []).append(link.a)
    seen, queue = {source}, deque([source])
    while queue:
        node = queue.popleft()
        for other in adjacency.get(node, []):
            if other not in seen:
                seen.add(other)
                queue.append(other)
    return sink in seen


def random_topology(seed, num_nodes=12, density=0.25):
    rng = np.random.default_rng(seed)
    nodes = [Node(f"n{i}", 'A', NodeKind.RELAY, 45.0 + 0.05 * i, 10.0) for i in range(num_nodes)]
    links = []
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            if rng.random() < density:
                links.append(Link(f"e{i}_{j}", f"n{i}", f"n{j}", 100.0))
    return NetworkTopology([Country('A', 'A')], nodes, links)


class TestConnectedComponents:
    def test_isolated_node(self):
        topology = NetworkTopology(
            [Country('A', 'A')],
            [Node('a', 'A', NodeKind.RELAY, 45.0, 10.0), Node('b', 'A', NodeKind.RELAY, 45.1, 10.0),
             Node('c', 'A', NodeKind.RELAY, 45.2, 10.0)],
            [Link('ab', 'a', 'b', 10.0)],
        )
        assert connected_components(topology) == [{'a', 'b'}, {'c'}]

    def test_empty_topology(self):
        assert connected_components(NetworkTopology()) == []

    def test_candidates_do_not_connect(self, fig1):
        components = connected_components(fig1.topology)
        assert len(components) == 3
        assert {'b3'} in components
        assert {'c2', 'd_border', 'd_site'} in components

    @pytest.mark.parametrize('seed', range(5))
    def test_partition(self, seed):
        topology = random_topology(seed, density=0.12)
        components = connected_components(topology)
        assert sum(len(c) for c in components) == len(topology.nodes)
        assert set().union(*components) == {n.id for n in topology.nodes}


class TestCheckUseCase:
    def test_fig1_findings(self, fig1):
        diagnostics = check_use_case(fig1.topology, fig1.use_cases[0])
        assert [d.code for d in diagnostics] == [
            DiagnosticCode.NO_ADMISSIBLE_PATH,
            DiagnosticCode.CLEARANCE_BLOCKED,
            DiagnosticCode.INTERNAL_BORDER_DISCONNECT,
        ]
        blocked, split = diagnostics[1], diagnostics[2]
        assert 'b1' in blocked.witness and 'b2' in blocked.witness
        assert split.subject == 'C'
        assert split.witness == ('c1', 'c2')

    def test_direct_link(self, fig5):
        use_case = UseCase('u', ('a_site', 'a_border'), 1.0)
        assert check_use_case(fig5.topology, use_case) == []

    def test_disconnected_without_clearance(self):
        topology = NetworkTopology(
            [Country('A', 'A')],
            [Node(n, 'A', NodeKind.RELAY, 45.0 + 0.1 * i, 10.0) for i, n in enumerate('abcd')],
            [Link('ab', 'a', 'b', 10.0), Link('cd', 'c', 'd', 10.0)],
        )
        diagnostics = check_use_case(topology, UseCase('u', ('a', 'd'), 1.0))
        assert [d.code for d in diagnostics] == [DiagnosticCode.NO_ADMISSIBLE_PATH]
        assert diagnostics[0].witness == ('a', 'b')

    @pytest.mark.parametrize('seed', range(10))
    def test_empty_iff_bfs_finds_a_path(self, seed):
        topology = random_topology(seed, density=0.15)
        rng = np.random.default_rng(seed)
        clearances = {link.id: int(rng.integers(0, 3)) for link in topology.links}
        topology = NetworkTopology(
            topology.countries, topology.nodes,
            [Link(l.id, l.a, l.b, l.capacity, required_clearance=clearances[l.id]) for l in topology.links],
        )
        use_case = UseCase('u', ('n0', 'n11'), 1.0, clearance=1)
        view = admissible_subgraph(topology, use_case)
        assert (check_use_case(topology, use_case) == []) == bfs_reachable(view, 'n0', 'n11')

    @pytest.mark.parametrize('seed', range(20))
    def test_adding_a_link_never_adds_unreachable_pairs(self, seed):
        rng = np.random.default_rng(seed)
        topology = random_topology(seed, density=0.12)
        use_cases = [
            UseCase(f"u{k}", (f"n{a}", f"n{b}"), 1.0, clearance=int(rng.integers(0, 2)))
            for k, (a, b) in enumerate([(0, 11), (1, 10), (2, 9), (3, 8)])
        ]

        def unreachable(topo):
            return sum(
                d.code == DiagnosticCode.NO_ADMISSIBLE_PATH for u in use_cases for d in check_use_case(topo, u)
            )

        before = unreachable(topology)
        for k in range(5):
            a, b = rng.choice(12, size=2, replace=False)
            extra = Link(f"extra{k}", f"n{a}", f"n{b}", 100.0, required_clearance=int(rng.integers(0, 2)))
            topology = NetworkTopology(topology.countries, topology.nodes, list(topology.links) + [extra])
            after = unreachable(topology)
            assert after <= before
            before = after


class TestCriticalElements:
    def test_chain(self):
        assert critical_elements(chain_topology(['a', 'b', 'c'])) == (['ab', 'bc'], ['b'])

    def test_triangle(self):
        assert critical_elements(chain_topology(['a', 'b', 'c'], closed=True)) == ([], [])

    def test_parallel_links_back_each_other_up(self):
        topology = NetworkTopology(
            [Country('A', 'A')],
            [Node('a', 'A', NodeKind.RELAY, 45.0, 10.0), Node('b', 'A', NodeKind.RELAY, 45.1, 10.0)],
            [Link('ab1', 'a', 'b', 10.0), Link('ab2', 'a', 'b', 10.0)],
        )
        assert critical_elements(topology) == ([], [])

    @pytest.mark.parametrize('seed', range(100))
    def test_removal_oracle(self, seed):
        topology = random_topology(seed, num_nodes=6 + seed % 9)
        graph = nx.Graph()
        graph.add_nodes_from(n.id for n in topology.nodes)
        graph.add_edges_from((l.a, l.b, {'id': l.id}) for l in topology.links)
        base = nx.number_connected_components(graph)

        bridges = []
        for a, b, data in list(graph.edges(data=True)):
            graph.remove_edge(a, b)
            if nx.number_connected_components(graph) > base:
                bridges.append(data['id'])
            graph.add_edge(a, b, **data)

        articulation = []
        for node in list(graph.nodes):
            reduced = graph.copy()
            reduced.remove_node(node)
            if nx.number_connected_components(reduced) > base - (1 if graph.degree(node) == 0 else 0):
                articulation.append(node)

        assert critical_elements(topology) == (sorted(bridges), sorted(articulation))


class TestSurvivability:
    def test_euroqci_design(self, euroqci):
        solution = planner.solve(euroqci)
        report = dict(survivability_report(euroqci, solution))

        # Romania is routed as a point-to-point black box
        assert 'ro_1' not in report and 'ro_2' not in report
        assert report['gr_1'] == ['uc_gr_bg', 'uc_gr_hu']
        assert report['bg_1'] == ['uc_gr_hu']
        assert report['bg_alt_1'] == ['uc_gr_hu']
        assert report['hu_1'] == ['uc_gr_hu']

    def test_single_path_loses_everything(self):
        topology = chain_topology(['a', 'b', 'c'])
        problem = DesignProblem(topology, [UseCase('u', ('a', 'c'), 50.0)])
        solution = planner.solve(problem)
        assert survivability_report(problem, solution) == [('ab', ['u']), ('bc', ['u'])]

    def test_two_full_capacity_paths(self):
        topology = chain_topology(['a', 'b', 'c', 'd'], closed=True)
        problem = DesignProblem(topology, [UseCase('u', ('a', 'c'), 100.0)])
        solution = planner.solve(problem)
        assert survivability_report(problem, solution) == []

    def test_unbuilt_candidate_is_skipped(self):
        base = chain_topology(['a', 'b', 'c', 'd'], closed=True)
        links = list(base.links) + [Link('spare', 'a', 'c', 100.0, LinkStatus.CANDIDATE, build_cost=9.0)]
        topology = NetworkTopology(base.countries, base.nodes, links)
        problem = DesignProblem(topology, [UseCase('u', ('a', 'c'), 100.0)])
        solution = planner.solve(problem)
        assert solution.built == ()
        assert all(link_id != 'spare' for link_id, _ in survivability_report(problem, solution))


def test_diagnose_fig1(fig1):
    diagnostics = diagnose_scenario(fig1)
    found = [d.code for d in diagnostics]
    assert found[0] == DiagnosticCode.DISCONNECTED_CLUSTERS
    assert diagnostics[0].witness == ('a_border', 'b3', 'c2')
    assert found[1:4] == [
        DiagnosticCode.NO_ADMISSIBLE_PATH,
        DiagnosticCode.CLEARANCE_BLOCKED,
        DiagnosticCode.INTERNAL_BORDER_DISCONNECT,
    ]
    assert set(found[4:]) <= {DiagnosticCode.BRIDGE_LINK, DiagnosticCode.ARTICULATION_NODE}
    assert 'L_ab' in {d.subject for d in diagnostics if d.code == DiagnosticCode.BRIDGE_LINK}
