"""
Satellite Pass Scheduling

Greedy, deterministic assignment of satellite passes to country key-exchange
requests. A key exchange needs the satellite (a flying trusted node) to pass
over an OGS of each of the two countries; the bits delivered by such a pass
pair become the capacity of the satellite-feed link joining those two OGSs in
the window in which the pair completes.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations

from utils.config import DEFAULT_WINDOW_DURATION_S
from utils.errors import InvalidSatelliteInputError, WrongLinkKindError
from utils.topology import LinkKind, NodeKind


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Pass:
    id: str
    satellite: str
    ogs: str
    window: int
    expected_yield: float
    weather_factor: float = 1.0

    @property
    def effective_yield(self):
        return self.expected_yield * self.weather_factor


@dataclass(frozen=True)
class SatRequest:
    id: str
    requester: str
    counterparty: str
    required_bits: float
    priority: float = 1.0
    deadline: int = 0

    @property
    def countries(self):
        return frozenset((self.requester, self.counterparty))


@dataclass(frozen=True)
class SatelliteSection:
    """Pass table and request queue carried by a scenario."""

    passes: tuple = ()
    requests: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'passes', tuple(self.passes))
        object.__setattr__(self, 'requests', tuple(self.requests))


@dataclass(frozen=True)
class SatAssignment:
    window: int
    satellite: str
    passes: tuple
    ogs_pair: tuple
    request: str
    bits: float


@dataclass(frozen=True)
class SatSchedule:
    assignments: tuple = ()
    delivered: dict = field(default_factory=dict)
    window_duration_s: float = DEFAULT_WINDOW_DURATION_S

    @property
    def pass_assignments(self):
        """Map pass id -> request id for every used pass."""
        mapping = {}
        for assignment in self.assignments:
            for pass_id in assignment.passes:
                mapping[pass_id] = assignment.request
        return dict(sorted(mapping.items()))


@dataclass(frozen=True)
class _PairOption:
    key: tuple
    satellite: str
    window: int
    ogs_pair: tuple
    countries: frozenset
    bits: float


def validate_satellite_inputs(topology, passes, requests):
    """
    Reject pass tables and requests that break the scheduling invariants.

    Raises:
        InvalidSatelliteInputError: listing every problem found
    """
    problems = []
    nodes = topology.node_map

    seen_passes = set()
    occupied = {}
    for p in passes:
        if p.id in seen_passes:
            problems.append(f"pass {p.id} declared twice")
        seen_passes.add(p.id)
        node = nodes.get(p.ogs)
        if node is None or node.kind != NodeKind.OGS:
            problems.append(f"pass {p.id} is over {p.ogs}, which is not a ground station")
        if p.expected_yield < 0:
            problems.append(f"pass {p.id} has negative yield")
        if not 0.0 <= p.weather_factor <= 1.0:
            problems.append(f"pass {p.id} weather factor {p.weather_factor} outside [0, 1]")
        if p.window < 0:
            problems.append(f"pass {p.id} has negative window")
        slot = (p.satellite, p.window)
        if slot in occupied and occupied[slot] != p.ogs:
            problems.append(f"satellite {p.satellite} is over two stations in window {p.window}")
        occupied.setdefault(slot, p.ogs)

    ogs_countries = {n.country for n in topology.nodes if n.kind == NodeKind.OGS}
    seen_requests = set()
    for r in requests:
        if r.id in seen_requests:
            problems.append(f"request {r.id} declared twice")
        seen_requests.add(r.id)
        if r.requester == r.counterparty:
            problems.append(f"request {r.id} names {r.requester} on both sides")
        for country in (r.requester, r.counterparty):
            if country not in ogs_countries:
                problems.append(f"request {r.id}: country {country} owns no ground station")
        if r.required_bits < 0 or r.priority < 0:
            problems.append(f"request {r.id} needs non-negative bits and priority")

    if problems:
        raise InvalidSatelliteInputError('; '.join(problems))


def _pair_options(topology, passes):
    by_satellite = {}
    for p in sorted(passes, key=lambda p: p.id):
        by_satellite.setdefault(p.satellite, []).append(p)

    options = []
    for satellite in sorted(by_satellite):
        for p, q in combinations(by_satellite[satellite], 2):
            if p.window == q.window or p.ogs == q.ogs:
                continue
            countries = frozenset((topology.country_of(p.ogs), topology.country_of(q.ogs)))
            if len(countries) != 2:
                continue
            options.append(_PairOption(
                key=(p.id, q.id),
                satellite=satellite,
                window=max(p.window, q.window),
                ogs_pair=tuple(sorted((p.ogs, q.ogs))),
                countries=countries,
                bits=min(p.effective_yield, q.effective_yield),
            ))
    return options


def request_score(request, remaining_fraction, options_left):
    """
    Scheduling policy: priority times unmet share, divided by the number of
    pass pairs still usable before the request's deadline.

    Requests with few remaining chances (island countries, single OGS) rise to
    the top; weather already shrinks the yields the options are built from.
    """
    return request.priority * remaining_fraction / max(1, options_left)


def schedule_passes(topology, passes, requests, window_duration_s=DEFAULT_WINDOW_DURATION_S):
    """
    Assign pass pairs to requests window by window.

    Within a window the highest ``request_score`` wins, ties go to the lowest
    request id and then the lowest pass ids; scores are recomputed after every
    assignment. Unservable requests simply end with delivered < required.

    Args:
        topology: NetworkTopology that owns the OGS nodes
        passes: iterable of Pass
        requests: iterable of SatRequest
        window_duration_s: Window length used for feed rates

    Returns:
        SatSchedule
    """
    passes = list(passes)
    requests = sorted(requests, key=lambda r: r.id)
    validate_satellite_inputs(topology, passes, requests)

    options = [o for o in _pair_options(topology, passes) if o.bits > 0]
    used = set()
    remaining = {r.id: float(r.required_bits) for r in requests}
    delivered = {r.id: 0.0 for r in requests}
    assignments = []

    def available(option):
        return option.key[0] not in used and option.key[1] not in used

    def options_left(request, window):
        return sum(
            1 for o in options
            if o.countries == request.countries and window <= o.window <= request.deadline and available(o)
        )

    for window in sorted({o.window for o in options}):
        window_options = [o for o in options if o.window == window]
        while True:
            candidates = []
            for request in requests:
                if remaining[request.id] <= 0 or window > request.deadline:
                    continue
                matching = [o for o in window_options if o.countries == request.countries and available(o)]
                if not matching:
                    continue
                fraction = remaining[request.id] / request.required_bits
                score = request_score(request, fraction, options_left(request, window))
                for option in matching:
                    candidates.append((-score, request.id, option.key, request, option))
            if not candidates:
                break

            _, _, _, request, option = min(candidates, key=lambda c: c[:3])
            bits = min(option.bits, remaining[request.id])
            used.update(option.key)
            remaining[request.id] -= bits
            delivered[request.id] += bits
            assignments.append(SatAssignment(
                window=window,
                satellite=option.satellite,
                passes=option.key,
                ogs_pair=option.ogs_pair,
                request=request.id,
                bits=bits,
            ))
            logger.debug('window %d: %s via %s -> %s (%.1f bits)', window, option.satellite, option.key, request.id, bits)

    return SatSchedule(tuple(assignments), delivered, float(window_duration_s))


def effective_feed_capacity(schedule, link, window):
    """
    Key rate a satellite-feed link offers in one window.

    Args:
        schedule: SatSchedule
        link: Link of kind satellite_feed
        window: Window index

    Returns:
        float: Delivered bits in the window divided by the window duration (bits/s)
    """
    if link.kind != LinkKind.SATELLITE_FEED:
        raise WrongLinkKindError(f"link kind is {link.kind.value}", link.id)
    pair = tuple(sorted((link.a, link.b)))
    bits = sum(a.bits for a in schedule.assignments if a.window == window and a.ogs_pair == pair)
    return bits / schedule.window_duration_s
