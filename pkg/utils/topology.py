"""
Federated Network Topology

Immutable data model of the federated infrastructure graph (countries, nodes,
existing and candidate links, ground-station candidates) plus its validation
and the per-use-case admissible view.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import networkx as nx
import numpy as np

from utils.config import DEFAULT_OGS_COST, EARTH_RADIUS_KM, MAX_LINK_RANGE_KM
from utils.errors import UnknownEndpointError


logger = logging.getLogger(__name__)

# ids end up inside synthetic arc ids joined with ":"
ID_PATTERN = re.compile(r"[A-Za-z0-9_.\-]+")


class NodeKind(str, Enum):
    RELAY = 'relay'
    BORDER = 'border'
    OGS = 'ogs'
    USER_SITE = 'user_site'


class LinkStatus(str, Enum):
    EXISTING = 'existing'
    CANDIDATE = 'candidate'


class LinkKind(str, Enum):
    TERRESTRIAL = 'terrestrial'
    SATELLITE_FEED = 'satellite_feed'


class DiagnosticCode(str, Enum):
    # topology validation
    DUPLICATE_ID = 'DUPLICATE_ID'
    INVALID_ID = 'INVALID_ID'
    UNKNOWN_COUNTRY = 'UNKNOWN_COUNTRY'
    UNKNOWN_NODE = 'UNKNOWN_NODE'
    INVALID_POSITION = 'INVALID_POSITION'
    NEGATIVE_CLEARANCE = 'NEGATIVE_CLEARANCE'
    SELF_LOOP = 'SELF_LOOP'
    NONPOSITIVE_CAPACITY = 'NONPOSITIVE_CAPACITY'
    INVALID_BUILD_COST = 'INVALID_BUILD_COST'
    CROSS_BORDER_NON_BORDER_NODE = 'CROSS_BORDER_NON_BORDER_NODE'
    LINK_EXCEEDS_RANGE = 'LINK_EXCEEDS_RANGE'
    DUPLICATE_LINK = 'DUPLICATE_LINK'
    SATELLITE_FEED_NOT_OGS = 'SATELLITE_FEED_NOT_OGS'
    OGS_CANDIDATE_NOT_OGS = 'OGS_CANDIDATE_NOT_OGS'
    INVALID_OGS_COST = 'INVALID_OGS_COST'
    INVALID_POLICY_FRACTION = 'INVALID_POLICY_FRACTION'
    INVALID_POLICY_PAIR = 'INVALID_POLICY_PAIR'
    NEGATIVE_POLICY_RATE = 'NEGATIVE_POLICY_RATE'
    INVALID_RESERVE_FRACTION = 'INVALID_RESERVE_FRACTION'
    # feasibility
    DISCONNECTED_CLUSTERS = 'DISCONNECTED_CLUSTERS'
    NO_ADMISSIBLE_PATH = 'NO_ADMISSIBLE_PATH'
    CLEARANCE_BLOCKED = 'CLEARANCE_BLOCKED'
    INTERNAL_BORDER_DISCONNECT = 'INTERNAL_BORDER_DISCONNECT'
    BRIDGE_LINK = 'BRIDGE_LINK'
    ARTICULATION_NODE = 'ARTICULATION_NODE'


@dataclass(frozen=True)
class Diagnostic:
    """A finding about one entity: stable code, subject id, text, witness ids."""

    code: DiagnosticCode
    subject: str
    detail: str = ''
    witness: tuple = ()

    def sort_key(self):
        return (self.code.value, self.subject, self.witness, self.detail)


@dataclass(frozen=True)
class PercentagePolicy:
    """A fraction of every national link's capacity is open to external use."""

    fraction: float


@dataclass(frozen=True)
class PointToPointPolicy:
    """
    Guaranteed external transit rates between pairs of border nodes.

    ``rates`` holds ``(node_a, node_b, bits_per_second)`` triples; pairs are
    unordered and stored with ``node_a < node_b``.
    """

    rates: tuple = ()

    def __post_init__(self):
        normalized = []
        for a, b, rate in self.rates:
            a, b = sorted((a, b))
            normalized.append((a, b, float(rate)))
        object.__setattr__(self, 'rates', tuple(sorted(normalized)))

    @property
    def rate_map(self):
        return {(a, b): rate for a, b, rate in self.rates}


@dataclass(frozen=True)
class Country:
    id: str
    name: str
    availability_policy: object = None


@dataclass(frozen=True)
class Node:
    id: str
    country: str
    kind: NodeKind
    lat: float
    lon: float
    clearance_level: int = 0
    security_level: int = 0

    @property
    def position(self):
        return (self.lat, self.lon)


@dataclass(frozen=True)
class Link:
    id: str
    a: str
    b: str
    capacity: float
    status: LinkStatus = LinkStatus.EXISTING
    build_cost: float = 0.0
    required_clearance: int = 0
    kind: LinkKind = LinkKind.TERRESTRIAL
    security_level: int = 0
    allow_long_range: bool = False
    custom_reserve_fraction: float = 0.0

    @property
    def endpoints(self):
        return frozenset((self.a, self.b))

    @property
    def is_candidate(self):
        return self.status == LinkStatus.CANDIDATE

    def other(self, node_id):
        return self.b if node_id == self.a else self.a


@dataclass(frozen=True)
class GroundStationCandidate:
    node: str
    build_cost: float = DEFAULT_OGS_COST


@dataclass(frozen=True)
class NetworkTopology:
    countries: tuple = ()
    nodes: tuple = ()
    links: tuple = ()
    ground_station_candidates: tuple = ()
    max_link_range_km: float = MAX_LINK_RANGE_KM

    def __post_init__(self):
        for name in ('countries', 'nodes', 'links', 'ground_station_candidates'):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @cached_property
    def country_map(self):
        return {c.id: c for c in self.countries}

    @cached_property
    def node_map(self):
        return {n.id: n for n in self.nodes}

    @cached_property
    def link_map(self):
        return {link.id: link for link in self.links}

    @cached_property
    def ogs_candidate_map(self):
        return {g.node: g for g in self.ground_station_candidates}

    def country_of(self, node_id):
        return self.node_map[node_id].country

    def link_countries(self, link):
        """Sorted tuple of the distinct countries a link's endpoints sit in."""
        return tuple(sorted({self.country_of(link.a), self.country_of(link.b)}))

    def is_cross_border(self, link):
        return self.country_of(link.a) != self.country_of(link.b)

    def border_nodes(self, country_id):
        return sorted(
            n.id for n in self.nodes
            if n.country == country_id and n.kind == NodeKind.BORDER
        )

    def national_links(self, country_id):
        return [
            link for link in self.links
            if self.country_of(link.a) == country_id and self.country_of(link.b) == country_id
        ]


@dataclass(frozen=True)
class TopologyView:
    """Read-only subset of a topology selected by node and link ids."""

    topology: NetworkTopology
    node_ids: frozenset = field(default_factory=frozenset)
    link_ids: frozenset = field(default_factory=frozenset)

    def nodes(self):
        return [n for n in self.topology.nodes if n.id in self.node_ids]

    def links(self, existing_only=False):
        return [
            link for link in self.topology.links
            if link.id in self.link_ids and not (existing_only and link.is_candidate)
        ]

    def to_graph(self, existing_only=False):
        return to_graph(self.topology, self.node_ids, self.links(existing_only))


def great_circle_km(a, b):
    """
    Haversine distance between two (latitude, longitude) positions in degrees.

    Args:
        a: (lat, lon) of the first point
        b: (lat, lon) of the second point

    Returns:
        float: Distance in kilometers on a sphere of radius EARTH_RADIUS_KM
    """
    lat1, lon1, lat2, lon2 = np.radians([a[0], a[1], b[0], b[1]])
    h = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    h = min(1.0, max(0.0, float(h)))
    return float(2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h)))


def link_length_km(topology, link):
    return great_circle_km(
        topology.node_map[link.a].position, topology.node_map[link.b].position
    )


def to_graph(topology, node_ids=None, links=None):
    """
    Build an undirected networkx graph of the given nodes and links.

    Parallel links collapse into one edge whose ``links`` attribute lists every
    link id between the pair.

    Args:
        topology: NetworkTopology
        node_ids: Nodes to include (default: all)
        links: Links to include (default: all); links touching excluded nodes are skipped

    Returns:
        networkx.Graph
    """
    if node_ids is None:
        node_ids = [n.id for n in topology.nodes]
    if links is None:
        links = topology.links

    graph = nx.Graph()
    graph.add_nodes_from(sorted(node_ids))
    for link in links:
        if link.a not in graph or link.b not in graph:
            continue
        if graph.has_edge(link.a, link.b):
            graph[link.a][link.b]['links'].append(link.id)
        else:
            graph.add_edge(link.a, link.b, links=[link.id])
    return graph


def _validate_policy(topology, country, diagnostics):
    policy = country.availability_policy
    if policy is None:
        return

    if isinstance(policy, PercentagePolicy):
        if not 0.0 <= policy.fraction <= 1.0:
            diagnostics.append(Diagnostic(
                DiagnosticCode.INVALID_POLICY_FRACTION, country.id,
                f"availability fraction {policy.fraction} outside [0, 1]"
            ))
        return

    for a, b, rate in policy.rates:
        for node_id in (a, b):
            node = topology.node_map.get(node_id)
            if node is None or node.country != country.id or node.kind != NodeKind.BORDER:
                diagnostics.append(Diagnostic(
                    DiagnosticCode.INVALID_POLICY_PAIR, country.id,
                    f"{node_id} is not a border node of {country.id}", (a, b)
                ))
        if a == b:
            diagnostics.append(Diagnostic(
                DiagnosticCode.INVALID_POLICY_PAIR, country.id,
                f"point-to-point pair repeats node {a}", (a, b)
            ))
        if rate < 0:
            diagnostics.append(Diagnostic(
                DiagnosticCode.NEGATIVE_POLICY_RATE, country.id,
                f"guaranteed rate {rate} between {a} and {b} is negative", (a, b)
            ))


def _duplicate_ids(items, kind, diagnostics):
    seen = set()
    for item_id in sorted(i.id for i in items):
        if not ID_PATTERN.fullmatch(item_id):
            diagnostics.append(Diagnostic(
                DiagnosticCode.INVALID_ID, item_id, f"{kind} id may only use letters, digits, _ . -"
            ))
        if item_id in seen:
            diagnostics.append(Diagnostic(
                DiagnosticCode.DUPLICATE_ID, item_id, f"{kind} id {item_id} declared more than once"
            ))
        seen.add(item_id)


def _validate_link(topology, link, diagnostics):
    nodes = topology.node_map
    known = True
    for node_id in (link.a, link.b):
        if node_id not in nodes:
            known = False
            diagnostics.append(Diagnostic(
                DiagnosticCode.UNKNOWN_NODE, link.id, f"endpoint {node_id} is not declared", (node_id,)
            ))

    if link.a == link.b:
        diagnostics.append(Diagnostic(
            DiagnosticCode.SELF_LOOP, link.id, f"both endpoints are {link.a}"
        ))
    if not link.capacity > 0:
        diagnostics.append(Diagnostic(
            DiagnosticCode.NONPOSITIVE_CAPACITY, link.id, f"capacity {link.capacity} must be positive"
        ))
    if link.build_cost < 0 or (link.build_cost == 0) != (link.status == LinkStatus.EXISTING):
        diagnostics.append(Diagnostic(
            DiagnosticCode.INVALID_BUILD_COST, link.id,
            f"{link.status.value} link has build cost {link.build_cost}"
        ))
    if link.required_clearance < 0 or link.security_level < 0:
        diagnostics.append(Diagnostic(
            DiagnosticCode.NEGATIVE_CLEARANCE, link.id, 'clearance and security levels must be >= 0'
        ))
    if not known:
        return

    node_a, node_b = nodes[link.a], nodes[link.b]
    cross_border = node_a.country != node_b.country

    if link.kind == LinkKind.SATELLITE_FEED:
        if node_a.kind != NodeKind.OGS or node_b.kind != NodeKind.OGS:
            diagnostics.append(Diagnostic(
                DiagnosticCode.SATELLITE_FEED_NOT_OGS, link.id,
                'satellite feeds must join two ground stations', (link.a, link.b)
            ))
    else:
        if cross_border and (node_a.kind != NodeKind.BORDER or node_b.kind != NodeKind.BORDER):
            diagnostics.append(Diagnostic(
                DiagnosticCode.CROSS_BORDER_NON_BORDER_NODE, link.id,
                f"cross-border link {node_a.country}-{node_b.country} must join border nodes",
                (link.a, link.b)
            ))
        if not link.allow_long_range:
            length = great_circle_km(node_a.position, node_b.position)
            if length > topology.max_link_range_km:
                diagnostics.append(Diagnostic(
                    DiagnosticCode.LINK_EXCEEDS_RANGE, link.id,
                    f"length {length:.1f} km exceeds range {topology.max_link_range_km:.1f} km"
                ))

    reserve = link.custom_reserve_fraction
    if not 0.0 <= reserve <= 1.0 or (reserve > 0 and not cross_border):
        diagnostics.append(Diagnostic(
            DiagnosticCode.INVALID_RESERVE_FRACTION, link.id,
            f"custom reserve {reserve} needs a cross-border link and a value in [0, 1]"
        ))


def validate_topology(topology):
    """
    Check every topology invariant and return all findings.

    Validation never stops at the first problem. The result is sorted, so
    permuting the input lists yields the same diagnostics.

    Args:
        topology: NetworkTopology

    Returns:
        list[Diagnostic]: Empty when the topology is well formed
    """
    diagnostics = []

    _duplicate_ids(topology.countries, 'country', diagnostics)
    _duplicate_ids(topology.nodes, 'node', diagnostics)
    _duplicate_ids(topology.links, 'link', diagnostics)

    for country in topology.countries:
        _validate_policy(topology, country, diagnostics)

    for node in topology.nodes:
        if node.country not in topology.country_map:
            diagnostics.append(Diagnostic(
                DiagnosticCode.UNKNOWN_COUNTRY, node.id, f"country {node.country} is not declared"
            ))
        if not (-90.0 <= node.lat <= 90.0 and -180.0 <= node.lon <= 180.0):
            diagnostics.append(Diagnostic(
                DiagnosticCode.INVALID_POSITION, node.id, f"position ({node.lat}, {node.lon}) out of range"
            ))
        if node.clearance_level < 0 or node.security_level < 0:
            diagnostics.append(Diagnostic(
                DiagnosticCode.NEGATIVE_CLEARANCE, node.id, 'clearance and security levels must be >= 0'
            ))

    seen_pairs = {}
    for link in topology.links:
        _validate_link(topology, link, diagnostics)
        key = (link.endpoints, link.kind)
        seen_pairs.setdefault(key, []).append(link.id)

    for (endpoints, kind), link_ids in seen_pairs.items():
        if len(link_ids) > 1:
            for link_id in sorted(link_ids)[1:]:
                diagnostics.append(Diagnostic(
                    DiagnosticCode.DUPLICATE_LINK, link_id,
                    f"another {kind.value} link joins {' and '.join(sorted(endpoints))}",
                    tuple(sorted(link_ids))
                ))

    seen_ogs = set()
    for candidate in topology.ground_station_candidates:
        node = topology.node_map.get(candidate.node)
        if candidate.node in seen_ogs:
            diagnostics.append(Diagnostic(
                DiagnosticCode.DUPLICATE_ID, candidate.node, 'ground station candidate declared twice'
            ))
        seen_ogs.add(candidate.node)
        if node is None:
            diagnostics.append(Diagnostic(
                DiagnosticCode.UNKNOWN_NODE, candidate.node, 'ground station candidate node is not declared'
            ))
        elif node.kind != NodeKind.OGS:
            diagnostics.append(Diagnostic(
                DiagnosticCode.OGS_CANDIDATE_NOT_OGS, candidate.node, f"node kind is {node.kind.value}"
            ))
        if not candidate.build_cost > 0:
            diagnostics.append(Diagnostic(
                DiagnosticCode.INVALID_OGS_COST, candidate.node, f"build cost {candidate.build_cost} must be positive"
            ))

    return sorted(diagnostics, key=Diagnostic.sort_key)


def admissible_subgraph(topology, use_case):
    """
    Restrict a topology to what one use-case may route through.

    Keeps links whose required clearance the use-case holds, nodes whose
    clearance level it holds (waived for relays when ``masked_relays`` is set),
    drops every node of an excluded country, and always keeps both endpoints.

    Args:
        topology: NetworkTopology
        use_case: UseCase

    Returns:
        TopologyView

    Raises:
        UnknownEndpointError: an endpoint is not a node of the topology
    """
    endpoints = set(use_case.endpoints)
    missing = sorted(e for e in endpoints if e not in topology.node_map)
    if missing:
        raise UnknownEndpointError(f"endpoints {missing} are not in the topology", use_case.id)

    excluded = set(use_case.excluded_countries)
    masked = getattr(use_case, 'masked_relays', False)

    node_ids = set()
    for node in topology.nodes:
        if node.id in endpoints:
            node_ids.add(node.id)
        elif node.country in excluded:
            continue
        elif masked or node.clearance_level <= use_case.clearance:
            node_ids.add(node.id)

    link_ids = {
        link.id for link in topology.links
        if link.a in node_ids and link.b in node_ids
        and link.required_clearance <= use_case.clearance
    }
    return TopologyView(topology, frozenset(node_ids), frozenset(link_ids))
