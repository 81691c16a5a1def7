"""
Feasibility Diagnostics

Pre-optimization checks that explain why an international use-case cannot be
served by the existing infrastructure: disconnected clusters, clearance
blocks, countries whose border nodes are not connected internally, and single
points of failure. Also re-solves a finished design under single-link failures.
"""

import logging
from dataclasses import replace

import networkx as nx

from utils import planner
from utils.config import FLOW_TOL
from utils.topology import (
    Diagnostic, DiagnosticCode, NodeKind, admissible_subgraph, to_graph
)


logger = logging.getLogger(__name__)

__all__ = [
    'Diagnostic', 'DiagnosticCode', 'connected_components', 'check_use_case',
    'critical_elements', 'survivability_report', 'diagnose_scenario',
]


def _existing_links(topology):
    return [link for link in topology.links if not link.is_candidate]


def connected_components(topology):
    """
    Partition the nodes by connectivity over existing links.

    Args:
        topology: NetworkTopology

    Returns:
        list[set]: Components ordered by their smallest node id
    """
    graph = to_graph(topology, links=_existing_links(topology))
    components = [set(c) for c in nx.connected_components(graph)]
    return sorted(components, key=min)


def _internal_border_groups(topology, country_id):
    """Border nodes of a country grouped by internal existing-link component."""
    members = [n.id for n in topology.nodes if n.country == country_id]
    internal = [
        link for link in _existing_links(topology)
        if topology.country_of(link.a) == country_id and topology.country_of(link.b) == country_id
    ]
    graph = to_graph(topology, members, internal)
    borders = set(topology.border_nodes(country_id))
    groups = []
    for component in nx.connected_components(graph):
        touching = borders & component
        if touching:
            groups.append(touching)
    return groups


def _route_graph(topology, use_case, apply_clearance, repaired):
    endpoints = set(use_case.endpoints)
    excluded = set(use_case.excluded_countries)
    masked = use_case.masked_relays
    nodes = set()
    for node in topology.nodes:
        if node.id in endpoints:
            nodes.add(node.id)
        elif node.country in excluded:
            continue
        elif not apply_clearance or masked or node.clearance_level <= use_case.clearance:
            nodes.add(node.id)

    links = [
        link for link in _existing_links(topology)
        if not apply_clearance or link.required_clearance <= use_case.clearance
    ]
    graph = to_graph(topology, nodes, links)
    for country_id in repaired:
        present = [b for b in topology.border_nodes(country_id) if b in graph]
        for i, a in enumerate(present):
            for b in present[i + 1:]:
                if not graph.has_edge(a, b):
                    graph.add_edge(a, b, links=[])
    return graph


def check_use_case(topology, use_case):
    """
    Explain why a use-case has no admissible path over existing links.

    Countries are first treated as black boxes (their border nodes joined
    virtually when their internal network splits them); the difference between
    that relaxed route graph with and without clearance filtering identifies a
    clearance block.

    Args:
        topology: NetworkTopology
        use_case: UseCase

    Returns:
        list[Diagnostic]: Empty when an admissible existing path exists

    Raises:
        UnknownEndpointError: an endpoint is not in the topology
    """
    view = admissible_subgraph(topology, use_case)
    source, sink = use_case.source, use_case.sink
    admissible = view.to_graph(existing_only=True)
    if nx.has_path(admissible, source, sink):
        return []

    diagnostics = [Diagnostic(
        DiagnosticCode.NO_ADMISSIBLE_PATH, use_case.id,
        f"no admissible existing path from {source} to {sink}",
        tuple(sorted(nx.node_connected_component(admissible, source))),
    )]

    excluded = set(use_case.excluded_countries)
    split_countries = {}
    for country in topology.countries:
        if country.id in excluded:
            continue
        groups = _internal_border_groups(topology, country.id)
        if len(groups) > 1:
            split_countries[country.id] = groups

    relaxed = _route_graph(topology, use_case, apply_clearance=False, repaired=split_countries)
    filtered = _route_graph(topology, use_case, apply_clearance=True, repaired=split_countries)

    if nx.has_path(relaxed, source, sink) and not nx.has_path(filtered, source, sink):
        path = nx.shortest_path(relaxed, source, sink)
        diagnostics.append(Diagnostic(
            DiagnosticCode.CLEARANCE_BLOCKED, use_case.id,
            f"a route exists only if clearance {use_case.clearance} is exceeded",
            tuple(path),
        ))

    route_set = nx.node_connected_component(relaxed, source) | nx.node_connected_component(relaxed, sink)
    for country_id, groups in split_countries.items():
        touching = [group & route_set for group in groups]
        touching = [group for group in touching if group]
        if len(touching) > 1:
            witness = tuple(sorted(set().union(*touching)))
            diagnostics.append(Diagnostic(
                DiagnosticCode.INTERNAL_BORDER_DISCONNECT, country_id,
                f"border nodes of {country_id} on the route of {use_case.id} are not connected internally",
                witness,
            ))
    return diagnostics


def critical_elements(topology):
    """
    Bridges and articulation points of the existing-link graph.

    Parallel links between the same pair back each other up and are never
    bridges.

    Returns:
        tuple: (sorted bridge link ids, sorted articulation node ids)
    """
    graph = to_graph(topology, links=_existing_links(topology))
    bridges = []
    for a, b in nx.bridges(graph):
        link_ids = graph[a][b]['links']
        if len(link_ids) == 1:
            bridges.append(link_ids[0])
    articulation = sorted(nx.articulation_points(graph))
    return sorted(bridges), articulation


def survivability_report(problem, solution):
    """
    Fail each existing or built link in turn and re-solve the fixed design.

    The design's builds are pinned and the flows are re-optimised to serve as
    much demand as possible; a use-case is listed when it falls short of its
    required rate in any scheduled window.

    Args:
        problem: DesignProblem the solution was computed for
        solution: DesignSolution

    Returns:
        list[tuple]: (failed link id, sorted list of unservable use-case ids),
        only for failures that lose some demand
    """
    built = set(solution.built)
    fixed = {cid: 1 if cid in built else 0 for cid in planner.candidate_costs(problem.topology)}
    relaxed = replace(problem, objective=planner.Objective.MAX_SERVED, budget=None)

    report = []
    for link in problem.topology.links:
        if link.is_candidate and link.id not in built:
            continue
        outcome = planner.solve(relaxed, fixed_builds=fixed, failed_links={link.id})
        lost = sorted(
            u.id for u in problem.use_cases
            if any(outcome.served[u.id][w] < u.required_rate - FLOW_TOL for w in u.schedule)
        )
        if lost:
            logger.info('failure of %s loses %s', link.id, ', '.join(lost))
            report.append((link.id, lost))
    return report


def diagnose_scenario(problem):
    """
    Full pre-optimization report for a scenario.

    Returns:
        list[Diagnostic]: cluster finding, per-use-case findings in use-case
        order, then bridge links and articulation nodes
    """
    topology = problem.topology
    diagnostics = []

    components = connected_components(topology)
    if len(components) > 1:
        diagnostics.append(Diagnostic(
            DiagnosticCode.DISCONNECTED_CLUSTERS, 'topology',
            f"existing links form {len(components)} separate clusters",
            tuple(min(c) for c in components),
        ))

    for use_case in problem.use_cases:
        diagnostics.extend(check_use_case(topology, use_case))

    bridges, articulation = critical_elements(topology)
    for link_id in bridges:
        diagnostics.append(Diagnostic(DiagnosticCode.BRIDGE_LINK, link_id, 'single link whose loss splits the network'))
    for node_id in articulation:
        kind = topology.node_map[node_id].kind
        note = ' (border node)' if kind == NodeKind.BORDER else ''
        diagnostics.append(Diagnostic(
            DiagnosticCode.ARTICULATION_NODE, node_id, f"single node whose loss splits the network{note}"
        ))
    return diagnostics
