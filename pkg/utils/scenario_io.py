"""
Scenario Files

Strict reading and writing of schema-v1 scenario JSON, saved solutions, and
DOT renderings of a topology with an optional design on top.
"""

import json
import logging
from dataclasses import replace
from pathlib import Path

from utils.config import (
    DEFAULT_OGS_COST, DEFAULT_WINDOW_DURATION_S, FEASIBILITY_TOL, INTEGRALITY_TOL,
    MAX_LINK_RANGE_KM, SCHEMA_VERSION
)
from utils.errors import InvalidSatelliteInputError, ScenarioError, ScenarioIssue
from utils.planner import (
    DesignProblem, DesignSolution, Objective, UseCase, candidate_costs, ogs_candidate_id,
    transit_arc_id, validate_problem
)
from utils.satellite import Pass, SatelliteSection, SatRequest, validate_satellite_inputs
from utils.topology import (
    Country, DiagnosticCode, GroundStationCandidate, Link, LinkKind, LinkStatus,
    NetworkTopology, Node, NodeKind, PercentagePolicy, PointToPointPolicy,
    validate_topology
)


logger = logging.getLogger(__name__)

REQUIRED = object()

# key -> (kind, default); kind is one of str, int, float, bool, list, dict
SCHEMA = {
    'scenario': {
        'schema_version': ('int', REQUIRED),
        'topology': ('dict', REQUIRED),
        'use_cases': ('list', []),
        'availability': ('dict', {}),
        'satellite': ('dict', None),
        'solver': ('dict', {}),
    },
    'topology': {
        'countries': ('list', REQUIRED),
        'nodes': ('list', REQUIRED),
        'links': ('list', []),
        'ground_station_candidates': ('list', []),
        'max_link_range_km': ('float', MAX_LINK_RANGE_KM),
    },
    'country': {
        'id': ('str', REQUIRED),
        'name': ('str', REQUIRED),
    },
    'node': {
        'id': ('str', REQUIRED),
        'country': ('str', REQUIRED),
        'kind': ('str', REQUIRED),
        'lat': ('float', REQUIRED),
        'lon': ('float', REQUIRED),
        'clearance_level': ('int', 0),
        'security_level': ('int', 0),
    },
    'link': {
        'id': ('str', REQUIRED),
        'a': ('str', REQUIRED),
        'b': ('str', REQUIRED),
        'capacity': ('float', REQUIRED),
        'status': ('str', REQUIRED),
        'build_cost': ('float', 0.0),
        'required_clearance': ('int', 0),
        'kind': ('str', LinkKind.TERRESTRIAL.value),
        'security_level': ('int', 0),
        'allow_long_range': ('bool', False),
        'custom_reserve_fraction': ('float', 0.0),
    },
    'ground_station_candidate': {
        'node': ('str', REQUIRED),
        'build_cost': ('float', DEFAULT_OGS_COST),
    },
    'use_case': {
        'id': ('str', REQUIRED),
        'endpoints': ('list', REQUIRED),
        'required_rate': ('float', REQUIRED),
        'schedule': ('list', [0]),
        'clearance': ('int', 0),
        'min_security_level': ('int', 0),
        'excluded_countries': ('list', []),
        'masked_relays': ('bool', False),
    },
    'percentage': {
        'percentage': ('float', REQUIRED),
    },
    'point_to_point': {
        'point_to_point': ('list', REQUIRED),
    },
    'guarantee': {
        'a': ('str', REQUIRED),
        'b': ('str', REQUIRED),
        'rate': ('float', REQUIRED),
    },
    'satellite': {
        'passes': ('list', []),
        'requests': ('list', []),
    },
    'pass': {
        'id': ('str', REQUIRED),
        'satellite': ('str', REQUIRED),
        'ogs': ('str', REQUIRED),
        'window': ('int', REQUIRED),
        'expected_yield': ('float', REQUIRED),
        'weather_factor': ('float', 1.0),
    },
    'request': {
        'id': ('str', REQUIRED),
        'requester': ('str', REQUIRED),
        'counterparty': ('str', REQUIRED),
        'required_bits': ('float', REQUIRED),
        'priority': ('float', 1.0),
        'deadline': ('int', REQUIRED),
    },
    'solver': {
        'objective': ('str', Objective.MIN_COST.value),
        'budget': ('float', None),
        'num_windows': ('int', 1),
        'window_duration_s': ('float', DEFAULT_WINDOW_DURATION_S),
        'feasibility_tol': ('float', FEASIBILITY_TOL),
        'integrality_tol': ('float', INTEGRALITY_TOL),
    },
}

_REFERENCE_CODES = {DiagnosticCode.UNKNOWN_NODE, DiagnosticCode.UNKNOWN_COUNTRY}


class _Reader:
    """Collects issues while walking a decoded scenario document."""

    def __init__(self, text):
        self.lines = text.splitlines()
        self.issues = []

    def line_of(self, token):
        needle = json.dumps(token) if isinstance(token, str) else str(token)
        for number, line in enumerate(self.lines, start=1):
            if needle in line:
                return number
        return None

    def issue(self, code, message, token=None):
        self.issues.append(ScenarioIssue(code, message, self.line_of(token) if token is not None else None))

    def _coerce(self, kind, value, where, key):
        ok = {
            'str': isinstance(value, str),
            'bool': isinstance(value, bool),
            'int': isinstance(value, int) and not isinstance(value, bool),
            'float': isinstance(value, (int, float)) and not isinstance(value, bool),
            'list': isinstance(value, list),
            'dict': isinstance(value, dict),
        }[kind]
        if not ok:
            self.issue('TYPE_ERROR', f"{where}.{key} must be {kind}, got {type(value).__name__}", key)
            return None
        return float(value) if kind == 'float' else value

    def take(self, obj, schema_name, where):
        """Return a dict of every schema key, defaults applied, or None."""
        if not isinstance(obj, dict):
            self.issue('TYPE_ERROR', f"{where} must be an object")
            return None
        schema = SCHEMA[schema_name]
        result = {}
        valid = True
        for key in sorted(set(obj) - set(schema)):
            self.issue('UNKNOWN_KEY', f"{where} has unknown key {key!r}", key)
            valid = False
        for key, (kind, default) in schema.items():
            if key not in obj:
                if default is REQUIRED:
                    self.issue('MISSING_KEY', f"{where} is missing {key!r}", obj.get('id'))
                    valid = False
                result[key] = default
                continue
            if obj[key] is None and default is None:
                result[key] = None
                continue
            value = self._coerce(kind, obj[key], where, key)
            if value is None:
                valid = False
            result[key] = value
        return result if valid else None

    def enum(self, enum_cls, value, where, token):
        try:
            return enum_cls(value)
        except ValueError:
            allowed = ', '.join(e.value for e in enum_cls)
            self.issue('INVARIANT_VIOLATION', f"{where}: {value!r} is not one of {allowed}", token)
            return None


def _parse_policy(reader, country_id, raw):
    where = f"availability.{country_id}"
    if isinstance(raw, dict) and 'percentage' in raw:
        fields = reader.take(raw, 'percentage', where)
        return PercentagePolicy(fields['percentage']) if fields else None
    fields = reader.take(raw, 'point_to_point', where)
    if not fields:
        return None
    rates = []
    for i, entry in enumerate(fields['point_to_point']):
        guarantee = reader.take(entry, 'guarantee', f"{where}.point_to_point[{i}]")
        if guarantee:
            rates.append((guarantee['a'], guarantee['b'], guarantee['rate']))
    return PointToPointPolicy(tuple(rates))


def _parse_topology(reader, raw, availability):
    fields = reader.take(raw, 'topology', 'topology')
    if not fields:
        return None

    policies = {}
    for country_id, policy_raw in availability.items():
        policy = _parse_policy(reader, country_id, policy_raw)
        if policy is not None:
            policies[country_id] = policy

    countries = []
    for i, entry in enumerate(fields['countries']):
        c = reader.take(entry, 'country', f"topology.countries[{i}]")
        if c:
            countries.append(Country(c['id'], c['name'], policies.get(c['id'])))
    known_countries = {c.id for c in countries}
    for country_id in sorted(set(availability) - known_countries):
        reader.issue('UNRESOLVED_REFERENCE', f"availability names undeclared country {country_id!r}", country_id)

    nodes = []
    for i, entry in enumerate(fields['nodes']):
        n = reader.take(entry, 'node', f"topology.nodes[{i}]")
        if not n:
            continue
        kind = reader.enum(NodeKind, n['kind'], f"node {n['id']}", n['id'])
        if kind is not None:
            nodes.append(Node(n['id'], n['country'], kind, n['lat'], n['lon'],
                              n['clearance_level'], n['security_level']))

    links = []
    for i, entry in enumerate(fields['links']):
        l = reader.take(entry, 'link', f"topology.links[{i}]")
        if not l:
            continue
        status = reader.enum(LinkStatus, l['status'], f"link {l['id']}", l['id'])
        kind = reader.enum(LinkKind, l['kind'], f"link {l['id']}", l['id'])
        if status is None or kind is None:
            continue
        links.append(Link(
            l['id'], l['a'], l['b'], l['capacity'], status, l['build_cost'], l['required_clearance'],
            kind, l['security_level'], l['allow_long_range'], l['custom_reserve_fraction'],
        ))

    candidates = []
    for i, entry in enumerate(fields['ground_station_candidates']):
        g = reader.take(entry, 'ground_station_candidate', f"topology.ground_station_candidates[{i}]")
        if g:
            candidates.append(GroundStationCandidate(g['node'], g['build_cost']))

    return NetworkTopology(tuple(countries), tuple(nodes), tuple(links), tuple(candidates),
                           fields['max_link_range_km'])


def _parse_use_cases(reader, raw_list, topology):
    use_cases = []
    for i, entry in enumerate(raw_list):
        u = reader.take(entry, 'use_case', f"use_cases[{i}]")
        if not u:
            continue
        if not (all(isinstance(v, str) for v in u['endpoints'] + u['excluded_countries'])
                and all(isinstance(w, int) and not isinstance(w, bool) for w in u['schedule'])):
            reader.issue('TYPE_ERROR',
                         f"use-case {u['id']}: endpoints and excluded_countries hold ids, schedule holds windows",
                         u['id'])
            continue
        for node_id in u['endpoints']:
            if node_id not in topology.node_map:
                reader.issue('UNRESOLVED_REFERENCE', f"use-case {u['id']} names undeclared node {node_id!r}", node_id)
        for country_id in u['excluded_countries']:
            if country_id not in topology.country_map:
                reader.issue('UNRESOLVED_REFERENCE',
                             f"use-case {u['id']} excludes undeclared country {country_id!r}", country_id)
        use_cases.append(UseCase(
            u['id'], tuple(u['endpoints']), u['required_rate'], tuple(u['schedule']), u['clearance'],
            u['min_security_level'], frozenset(u['excluded_countries']), u['masked_relays'],
        ))
    return use_cases


def _parse_satellite(reader, raw, topology):
    fields = reader.take(raw, 'satellite', 'satellite')
    if not fields:
        return None
    passes = []
    for i, entry in enumerate(fields['passes']):
        p = reader.take(entry, 'pass', f"satellite.passes[{i}]")
        if not p:
            continue
        if p['ogs'] not in topology.node_map:
            reader.issue('UNRESOLVED_REFERENCE', f"pass {p['id']} names undeclared node {p['ogs']!r}", p['ogs'])
        passes.append(Pass(p['id'], p['satellite'], p['ogs'], p['window'], p['expected_yield'], p['weather_factor']))
    requests = []
    for i, entry in enumerate(fields['requests']):
        r = reader.take(entry, 'request', f"satellite.requests[{i}]")
        if not r:
            continue
        for country_id in (r['requester'], r['counterparty']):
            if country_id not in topology.country_map:
                reader.issue('UNRESOLVED_REFERENCE',
                             f"request {r['id']} names undeclared country {country_id!r}", country_id)
        requests.append(SatRequest(r['id'], r['requester'], r['counterparty'], r['required_bits'],
                                   r['priority'], r['deadline']))
    return SatelliteSection(tuple(passes), tuple(requests))


def check_scenario(problem, reader=None):
    """
    Raise ScenarioError when a parsed problem breaks a topology, use-case,
    solver or satellite invariant.

    Args:
        problem: DesignProblem
        reader: Optional reader of the source text, used to anchor issues to lines
    """
    reader = reader or _Reader('')
    topology = problem.topology
    for diagnostic in validate_topology(topology):
        reader.issue('INVARIANT_VIOLATION',
                     f"{diagnostic.code.value} {diagnostic.subject}: {diagnostic.detail}", diagnostic.subject)
    for subject, message in validate_problem(problem):
        reader.issue('INVARIANT_VIOLATION', f"{subject}: {message}", subject)
    if problem.satellite is not None:
        try:
            validate_satellite_inputs(topology, problem.satellite.passes, problem.satellite.requests)
        except InvalidSatelliteInputError as exc:
            reader.issue('INVARIANT_VIOLATION', exc.message)
    if reader.issues:
        raise ScenarioError(reader.issues)


def parse_scenario(text, strict=True, overrides=None):
    """
    Parse scenario JSON into a validated DesignProblem.

    Args:
        text: UTF-8 JSON text of a schema-v1 scenario
        strict: When False, invariant violations are left for the caller
            (syntax, schema and reference errors still raise)
        overrides: Optional DesignProblem field values (objective, budget, ...)
            applied before the invariant check

    Returns:
        DesignProblem

    Raises:
        ScenarioError: with every issue found, each anchored to a line when possible
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([ScenarioIssue('SYNTAX', exc.msg, exc.lineno)])

    reader = _Reader(text)
    top = reader.take(document, 'scenario', 'scenario')
    if top is None:
        raise ScenarioError(reader.issues)
    if top['schema_version'] != SCHEMA_VERSION:
        raise ScenarioError([ScenarioIssue(
            'SCHEMA_VERSION_UNSUPPORTED',
            f"schema_version {top['schema_version']} is not supported (expected {SCHEMA_VERSION})",
            reader.line_of('schema_version'),
        )])

    topology = _parse_topology(reader, top['topology'], top['availability'])
    solver = reader.take(top['solver'], 'solver', 'solver')
    if topology is None or solver is None:
        raise ScenarioError(reader.issues)

    use_cases = _parse_use_cases(reader, top['use_cases'], topology)
    satellite = _parse_satellite(reader, top['satellite'], topology) if top['satellite'] is not None else None
    objective = reader.enum(Objective, solver['objective'], 'solver.objective', 'objective')

    for diagnostic in validate_topology(topology):
        if diagnostic.code in _REFERENCE_CODES:
            reader.issue('UNRESOLVED_REFERENCE', f"{diagnostic.subject}: {diagnostic.detail}", diagnostic.subject)
    if reader.issues:
        raise ScenarioError(reader.issues)

    problem = DesignProblem(
        topology=topology,
        use_cases=tuple(use_cases),
        objective=objective,
        budget=solver['budget'],
        num_windows=solver['num_windows'],
        window_duration_s=solver['window_duration_s'],
        satellite=satellite,
        feasibility_tol=solver['feasibility_tol'],
        integrality_tol=solver['integrality_tol'],
    )
    if overrides:
        problem = replace(problem, **overrides)

    if strict:
        check_scenario(problem, reader)

    logger.info('parsed scenario: %d countries, %d nodes, %d links, %d use-cases',
                len(topology.countries), len(topology.nodes), len(topology.links), len(use_cases))
    return problem


def load_scenario(path, strict=True, overrides=None):
    """Read and parse a scenario file; unreadable files become SYNTAX issues."""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioError([ScenarioIssue('SYNTAX', f"cannot read {path}: {exc}")])
    return parse_scenario(text, strict, overrides)


def _policy_to_dict(policy):
    if isinstance(policy, PercentagePolicy):
        return {'percentage': policy.fraction}
    return {'point_to_point': [{'a': a, 'b': b, 'rate': rate} for a, b, rate in policy.rates]}


def scenario_to_dict(problem):
    """Plain-data form of a DesignProblem with every field written out."""
    topology = problem.topology
    document = {
        'schema_version': SCHEMA_VERSION,
        'topology': {
            'max_link_range_km': topology.max_link_range_km,
            'countries': [{'id': c.id, 'name': c.name} for c in topology.countries],
            'nodes': [
                {
                    'id': n.id, 'country': n.country, 'kind': n.kind.value, 'lat': n.lat, 'lon': n.lon,
                    'clearance_level': n.clearance_level, 'security_level': n.security_level,
                }
                for n in topology.nodes
            ],
            'links': [
                {
                    'id': l.id, 'a': l.a, 'b': l.b, 'capacity': l.capacity, 'status': l.status.value,
                    'build_cost': l.build_cost, 'required_clearance': l.required_clearance,
                    'kind': l.kind.value, 'security_level': l.security_level,
                    'allow_long_range': l.allow_long_range,
                    'custom_reserve_fraction': l.custom_reserve_fraction,
                }
                for l in topology.links
            ],
            'ground_station_candidates': [
                {'node': g.node, 'build_cost': g.build_cost} for g in topology.ground_station_candidates
            ],
        },
        'availability': {
            c.id: _policy_to_dict(c.availability_policy)
            for c in topology.countries if c.availability_policy is not None
        },
        'use_cases': [
            {
                'id': u.id, 'endpoints': list(u.endpoints), 'required_rate': u.required_rate,
                'schedule': list(u.schedule), 'clearance': u.clearance,
                'min_security_level': u.min_security_level,
                'excluded_countries': sorted(u.excluded_countries), 'masked_relays': u.masked_relays,
            }
            for u in problem.use_cases
        ],
        'solver': {
            'objective': problem.objective.value,
            'budget': problem.budget,
            'num_windows': problem.num_windows,
            'window_duration_s': problem.window_duration_s,
            'feasibility_tol': problem.feasibility_tol,
            'integrality_tol': problem.integrality_tol,
        },
    }
    if problem.satellite is not None:
        document['satellite'] = {
            'passes': [
                {
                    'id': p.id, 'satellite': p.satellite, 'ogs': p.ogs, 'window': p.window,
                    'expected_yield': p.expected_yield, 'weather_factor': p.weather_factor,
                }
                for p in problem.satellite.passes
            ],
            'requests': [
                {
                    'id': r.id, 'requester': r.requester, 'counterparty': r.counterparty,
                    'required_bits': r.required_bits, 'priority': r.priority, 'deadline': r.deadline,
                }
                for r in problem.satellite.requests
            ],
        }
    return document


def serialize_scenario(problem):
    """Scenario JSON text; parsing it again yields an equal DesignProblem."""
    return json.dumps(scenario_to_dict(problem), indent=2, sort_keys=True) + '\n'


def write_solution_json(solution):
    document = {
        'built': list(solution.built),
        'total_cost': solution.total_cost,
        'objective_value': solution.objective_value,
        'budget_shares': solution.budget_shares,
        'served': {u: {str(w): rate for w, rate in windows.items()} for u, windows in solution.served.items()},
        'flows': [
            {'use_case': u, 'link': arc, 'window': w, 'rate': rate}
            for (u, arc, w), rate in sorted(solution.flows.items())
        ],
    }
    return json.dumps(document, indent=2) + '\n'


def read_solution_json(text):
    """Inverse of ``write_solution_json``."""
    try:
        document = json.loads(text)
        return DesignSolution(
            built=tuple(document['built']),
            flows={(f['use_case'], f['link'], int(f['window'])): float(f['rate']) for f in document['flows']},
            total_cost=float(document['total_cost']),
            served={u: {int(w): float(r) for w, r in windows.items()} for u, windows in document['served'].items()},
            budget_shares={c: float(v) for c, v in document['budget_shares'].items()},
            objective_value=float(document.get('objective_value', 0.0)),
        )
    except json.JSONDecodeError as exc:
        raise ScenarioError([ScenarioIssue('SYNTAX', f"solution file: {exc.msg}", exc.lineno)])
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError([ScenarioIssue('MISSING_KEY', f"solution file is incomplete: {exc}")])


def check_solution_references(problem, solution):
    """
    Raise ScenarioError when a saved solution names use-cases, arcs, builds
    or windows the scenario does not declare.
    """
    topology = problem.topology
    use_case_ids = {u.id for u in problem.use_cases}
    arc_ids = {link.id for link in topology.links}
    for country in topology.countries:
        if isinstance(country.availability_policy, PointToPointPolicy):
            for a, b, _ in country.availability_policy.rates:
                arc_ids.add(transit_arc_id(country.id, a, b))
    candidate_ids = set(candidate_costs(topology))

    problems = set()
    for (u_id, arc_id, window) in solution.flows:
        if u_id not in use_case_ids:
            problems.add(f"flow names undeclared use-case {u_id!r}")
        if arc_id not in arc_ids:
            problems.add(f"flow names unknown link or transit arc {arc_id!r}")
        if not 0 <= window < problem.num_windows:
            problems.add(f"flow window {window} outside 0..{problem.num_windows - 1}")
    for u_id in solution.served:
        if u_id not in use_case_ids:
            problems.add(f"served rates name undeclared use-case {u_id!r}")
    for candidate_id in solution.built:
        if candidate_id not in candidate_ids:
            problems.add(f"built id {candidate_id!r} is not a candidate")
    if problems:
        raise ScenarioError([ScenarioIssue('UNRESOLVED_REFERENCE', message) for message in sorted(problems)])


def _dot_id(value):
    return json.dumps(str(value))


def emit_dot(topology, solution=None, highlight=()):
    """
    Render a topology (and optionally a design) as a DOT graph.

    National links are grey, international links orange; built candidates are
    bold green, unbuilt candidates dashed. Nodes listed in ``highlight`` (for
    example a diagnostic witness) are drawn red.

    Returns:
        str: DOT text, identical for identical inputs
    """
    built = set(solution.built) if solution is not None else set()
    highlight = set(highlight)
    lines = ['graph fedqci {', '  node [shape=circle, fontsize=10];']

    for country in topology.countries:
        members = [n for n in topology.nodes if n.country == country.id]
        lines.append(f"  subgraph {_dot_id('cluster_' + country.id)} {{")
        lines.append(f"    label={_dot_id(country.name)};")
        for node in members:
            shape = {'border': 'doublecircle', 'ogs': 'triangle', 'user_site': 'box'}.get(node.kind.value, 'circle')
            attrs = [f"kind={_dot_id(node.kind.value)}", f"shape={shape}"]
            if node.id in highlight:
                attrs.append('color="red"')
            if node.id in topology.ogs_candidate_map:
                status = 'built' if ogs_candidate_id(node.id) in built else 'candidate'
                attrs.append(f"status={_dot_id(status)}")
            lines.append(f"    {_dot_id(node.id)} [{', '.join(attrs)}];")
        lines.append('  }')

    for link in topology.links:
        international = topology.is_cross_border(link)
        attrs = [
            f"id={_dot_id(link.id)}",
            f"scope={_dot_id('international' if international else 'national')}",
            f"color={_dot_id('orange' if international else 'gray')}",
            f"capacity={_dot_id(f'{link.capacity:.6f}')}",
        ]
        if link.kind == LinkKind.SATELLITE_FEED:
            attrs.append('kind="satellite_feed"')
        if link.is_candidate:
            if link.id in built:
                attrs += ['status="built"', 'style="bold"', 'fontcolor="darkgreen"']
            else:
                attrs += ['status="candidate"', 'style="dashed"']
        else:
            attrs.append('status="existing"')
        if link.required_clearance:
            attrs.append(f"clearance={link.required_clearance}")
        lines.append(f"  {_dot_id(link.a)} -- {_dot_id(link.b)} [{', '.join(attrs)}];")

    lines.append('}')
    return '\n'.join(lines) + '\n'
