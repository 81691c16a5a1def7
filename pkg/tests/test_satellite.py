from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest

from utils import planner
from utils.errors import InfeasibleDesignError, InvalidSatelliteInputError, WrongLinkKindError
from utils.satellite import (
    Pass, SatRequest, SatSchedule, SatAssignment, effective_feed_capacity, request_score,
    schedule_passes, validate_satellite_inputs
)
from utils.topology import Country, Link, LinkKind, NetworkTopology, Node, NodeKind


def ogs_topology(countries=('X', 'Y', 'Z'), per_country=2):
    nodes = []
    for i, country in enumerate(countries):
        for k in range(per_country):
            nodes.append(Node(f"{country.lower()}_ogs{k + 1}", country, NodeKind.OGS, 40.0 + 2 * i, 10.0 + k))
    return NetworkTopology([Country(c, c) for c in countries], nodes, [])


def exhaustive_best_total(topology, passes, requests):
    """Largest total delivered bits over every assignment of disjoint pass pairs."""
    options = []
    for p, q in combinations(sorted(passes, key=lambda p: p.id), 2):
        if p.satellite != q.satellite or p.window == q.window:
            continue
        countries = frozenset((topology.country_of(p.ogs), topology.country_of(q.ogs)))
        if len(countries) != 2:
            continue
        bits = min(p.effective_yield, q.effective_yield)
        for r in requests:
            if r.countries == countries and max(p.window, q.window) <= r.deadline:
                options.append(((p.id, q.id), r.id, bits))

    required = {r.id: r.required_bits for r in requests}
    best = 0.0

    def search(index, used, delivered):
        nonlocal best
        total = sum(min(required[r], bits) for r, bits in delivered.items())
        best = max(best, total)
        for k in range(index, len(options)):
            pair, request_id, bits = options[k]
            if pair[0] in used or pair[1] in used:
                continue
            delivered[request_id] = delivered.get(request_id, 0.0) + bits
            search(k + 1, used | set(pair), delivered)
            delivered[request_id] -= bits

    search(0, frozenset(), {})
    return best


class TestFixtureSchedule:
    def test_pinned_assignments(self, sat_problem):
        section = sat_problem.satellite
        schedule = schedule_passes(sat_problem.topology, section.passes, section.requests)
        assert [(a.window, a.satellite, a.passes, a.ogs_pair, a.request, a.bits) for a in schedule.assignments] == [
            (1, 'S3', ('p-s3-0', 'p-s3-1'), ('x_ogs2', 'z_ogs2'), 'R-XZ', 1.0e6),
            (1, 'S2', ('p-s2-0', 'p-s2-1'), ('y_ogs2', 'z_ogs1'), 'R-YZ', 2.0e6),
            (1, 'S1', ('p-s1-0', 'p-s1-1'), ('x_ogs1', 'y_ogs1'), 'R-XY', 3.6e6),
            (4, 'S1', ('p-s1-3', 'p-s1-4'), ('x_ogs1', 'y_ogs1'), 'R-XY', 1.0e6),
            (5, 'S2', ('p-s2-3', 'p-s2-5'), ('y_ogs2', 'z_ogs1'), 'R-ZY', 1.5e6),
        ]
        assert schedule.delivered == {'R-XY': 4.6e6, 'R-XZ': 1.0e6, 'R-YZ': 2.0e6, 'R-ZY': 1.5e6}

    def test_no_satellite_double_booked(self, sat_problem):
        section = sat_problem.satellite
        schedule = schedule_passes(sat_problem.topology, section.passes, section.requests)
        slots = [(a.satellite, a.window) for a in schedule.assignments]
        assert len(slots) == len(set(slots))
        used = [p for a in schedule.assignments for p in a.passes]
        assert len(used) == len(set(used))
        assert schedule.pass_assignments['p-s2-5'] == 'R-ZY'

    def test_delivery_is_bounded(self, sat_problem):
        section = sat_problem.satellite
        schedule = schedule_passes(sat_problem.topology, section.passes, section.requests)
        offered = sum(p.effective_yield for p in section.passes)
        assert sum(schedule.delivered.values()) <= offered
        for r in section.requests:
            assert schedule.delivered[r.id] <= r.required_bits

    def test_delivery_matches_exhaustive_enumeration(self, sat_problem):
        section = sat_problem.satellite
        schedule = schedule_passes(sat_problem.topology, section.passes, section.requests)
        best = exhaustive_best_total(sat_problem.topology, section.passes, section.requests)
        assert best == pytest.approx(9.1e6)
        assert sum(schedule.delivered.values()) == pytest.approx(best)

    def test_feed_capacities(self, sat_problem):
        section = sat_problem.satellite
        schedule = schedule_passes(sat_problem.topology, section.passes, section.requests)
        links = sat_problem.topology.link_map
        assert effective_feed_capacity(schedule, links['F_xy'], 1) == pytest.approx(1000.0)
        assert effective_feed_capacity(schedule, links['F_xy'], 4) == pytest.approx(1.0e6 / 3600)
        assert effective_feed_capacity(schedule, links['F_xy'], 0) == 0.0
        assert effective_feed_capacity(schedule, links['F_xy'], 3) == 0.0
        assert effective_feed_capacity(schedule, links['F_yz'], 5) == pytest.approx(1.5e6 / 3600)
        assert effective_feed_capacity(schedule, links['F_xz'], 1) == pytest.approx(1.0e6 / 3600)

    def test_wrong_link_kind(self, sat_problem):
        schedule = SatSchedule()
        with pytest.raises(WrongLinkKindError) as excinfo:
            effective_feed_capacity(schedule, sat_problem.topology.link_map['L_x'], 0)
        assert excinfo.value.code == 'WRONG_LINK_KIND'

    def test_planner_uses_the_feed_schedule(self, sat_problem):
        solution = planner.solve(sat_problem)
        assert solution.served == {'uc_xy': {1: 500.0}}
        assert abs(solution.flows[('uc_xy', 'F_xy', 1)]) == pytest.approx(500.0)

        greedy = replace(sat_problem, use_cases=(replace(sat_problem.use_cases[0], required_rate=1500.0),))
        with pytest.raises(InfeasibleDesignError):
            planner.solve(greedy)


def test_rate_from_delivered_bits():
    link = Link('feed', 'x_ogs1', 'y_ogs1', 100.0, kind=LinkKind.SATELLITE_FEED)
    schedule = SatSchedule(
        assignments=(SatAssignment(0, 'S1', ('p1', 'p2'), ('x_ogs1', 'y_ogs1'), 'R', 7.2e6),),
        window_duration_s=3600.0,
    )
    assert effective_feed_capacity(schedule, link, 0) == pytest.approx(2000.0)
    assert effective_feed_capacity(schedule, link, 1) == 0.0


def test_one_pair_serves_one_request():
    topology = ogs_topology(('X', 'Y'), per_country=1)
    passes = [Pass('p1', 'S1', 'x_ogs1', 0, 5e6), Pass('p2', 'S1', 'y_ogs1', 1, 6e6)]
    schedule = schedule_passes(topology, passes, [SatRequest('R', 'X', 'Y', 4e6, deadline=1)])
    assert schedule.delivered == {'R': 4e6}
    assert schedule.assignments[0].window == 1


def test_deadline_is_respected():
    topology = ogs_topology(('X', 'Y'), per_country=1)
    passes = [Pass('p1', 'S1', 'x_ogs1', 0, 5e6), Pass('p2', 'S1', 'y_ogs1', 2, 6e6)]
    schedule = schedule_passes(topology, passes, [SatRequest('R', 'X', 'Y', 4e6, deadline=1)])
    assert schedule.assignments == ()
    assert schedule.delivered == {'R': 0.0}


def test_weather_scales_the_yield():
    topology = ogs_topology(('X', 'Y'), per_country=1)
    passes = [Pass('p1', 'S1', 'x_ogs1', 0, 5e6, weather_factor=0.2), Pass('p2', 'S1', 'y_ogs1', 1, 6e6)]
    schedule = schedule_passes(topology, passes, [SatRequest('R', 'X', 'Y', 4e6, deadline=3)])
    assert schedule.delivered == {'R': pytest.approx(1e6)}


class TestTieRule:
    def test_fewer_remaining_options_wins(self):
        topology = ogs_topology(('X', 'Y'), per_country=1)
        passes = [
            Pass('a0', 'S1', 'x_ogs1', 0, 1e6), Pass('a1', 'S1', 'y_ogs1', 1, 1e6),
            Pass('b0', 'S2', 'x_ogs1', 1, 1e6), Pass('b1', 'S2', 'y_ogs1', 2, 1e6),
        ]
        requests = [
            SatRequest('R1', 'X', 'Y', 1e6, deadline=2),
            SatRequest('R2', 'X', 'Y', 1e6, deadline=1),
        ]
        schedule = schedule_passes(topology, passes, requests)
        # R2 can only use the window-1 pair, R1 still has the window-2 pair after it
        assert schedule.pass_assignments == {'a0': 'R2', 'a1': 'R2', 'b0': 'R1', 'b1': 'R1'}

    def test_equal_options_go_to_the_lower_id(self):
        topology = ogs_topology(('X', 'Y'), per_country=1)
        passes = [Pass('a0', 'S1', 'x_ogs1', 0, 1e6), Pass('a1', 'S1', 'y_ogs1', 1, 1e6)]
        requests = [
            SatRequest('R2', 'X', 'Y', 1e6, deadline=1),
            SatRequest('R1', 'Y', 'X', 1e6, deadline=1),
        ]
        schedule = schedule_passes(topology, passes, requests)
        assert schedule.delivered == {'R1': 1e6, 'R2': 0.0}

    def test_score_formula(self):
        request = SatRequest('R', 'X', 'Y', 1e6, priority=2.0, deadline=1)
        assert request_score(request, 0.5, 4) == pytest.approx(0.25)
        assert request_score(request, 0.5, 0) == pytest.approx(1.0)


def random_instance(seed):
    rng = np.random.default_rng(seed)
    topology = ogs_topology(('X', 'Y', 'Z'), per_country=1)
    stations = [n.id for n in topology.nodes]
    passes = []
    for satellite in ('S1', 'S2'):
        for window in range(4):
            if rng.random() < 0.8:
                passes.append(Pass(
                    f"{satellite}-{window}", satellite, str(rng.choice(stations)), window,
                    float(rng.integers(1, 5)) * 1e6, float(rng.choice([0.5, 1.0])),
                ))
    pairs = [('X', 'Y'), ('Y', 'Z'), ('X', 'Z')]
    requests = []
    for k in range(int(rng.integers(1, 4))):
        a, b = pairs[int(rng.integers(0, 3))]
        requests.append(SatRequest(
            f"R{k}", a, b, float(rng.integers(1, 8)) * 1e6, float(rng.integers(1, 4)), int(rng.integers(1, 4)),
        ))
    return topology, passes, requests


@pytest.mark.parametrize('seed', range(15))
def test_random_instances_against_exhaustive_enumeration(seed):
    topology, passes, requests = random_instance(seed)
    schedule = schedule_passes(topology, passes, requests)
    again = schedule_passes(topology, list(reversed(passes)), list(reversed(requests)))
    assert again == schedule

    total = sum(schedule.delivered.values())
    assert total <= exhaustive_best_total(topology, passes, requests) + 1e-6
    for r in requests:
        assert schedule.delivered[r.id] <= r.required_bits + 1e-6


def first_window(schedule, request_id):
    return min((a.window for a in schedule.assignments if a.request == request_id), default=None)


class TestPriority:
    def test_raising_priority_can_cost_bits_later(self):
        # a small early pair and a large late one; the request scoring higher
        # in window 1 takes the small pair and then loses the large one
        topology = ogs_topology(('X', 'Y'), per_country=1)
        passes = [
            Pass('a0', 'S1', 'x_ogs1', 0, 1.0), Pass('a1', 'S1', 'y_ogs1', 1, 1.0),
            Pass('b2', 'S2', 'x_ogs1', 2, 10.0), Pass('b3', 'S2', 'y_ogs1', 3, 10.0),
        ]

        def run(priority):
            requests = [
                SatRequest('R1', 'X', 'Y', 10.0, priority=priority, deadline=3),
                SatRequest('R2', 'X', 'Y', 10.0, priority=1.0, deadline=3),
            ]
            return schedule_passes(topology, passes, requests)

        low, high = run(0.95), run(1.01)
        assert low.delivered == {'R1': 10.0, 'R2': 1.0}
        assert high.delivered == {'R1': 1.0, 'R2': 10.0}
        assert first_window(low, 'R1') == 3
        assert first_window(high, 'R1') == 1

    @pytest.mark.parametrize('seed', range(15))
    def test_raising_priority_never_delays_first_service(self, seed):
        topology, passes, requests = random_instance(seed)
        schedule = schedule_passes(topology, passes, requests)
        for r in requests:
            boosted = [replace(q, priority=q.priority + 2.0) if q.id == r.id else q for q in requests]
            before = first_window(schedule, r.id)
            after = first_window(schedule_passes(topology, passes, boosted), r.id)
            if before is not None:
                assert after is not None and after <= before


class TestValidation:
    def test_double_booked_satellite(self):
        topology = ogs_topology()
        passes = [Pass('p1', 'S1', 'x_ogs1', 0, 1e6), Pass('p2', 'S1', 'y_ogs1', 0, 1e6)]
        with pytest.raises(InvalidSatelliteInputError, match='two stations'):
            validate_satellite_inputs(topology, passes, [])

    def test_bad_yields_and_weather(self):
        topology = ogs_topology()
        passes = [Pass('p1', 'S1', 'x_ogs1', 0, -1.0), Pass('p2', 'S1', 'y_ogs1', 1, 1e6, weather_factor=1.5)]
        with pytest.raises(InvalidSatelliteInputError) as excinfo:
            validate_satellite_inputs(topology, passes, [])
        assert 'negative yield' in excinfo.value.message
        assert 'weather factor' in excinfo.value.message

    def test_requests_need_two_countries_with_stations(self):
        topology = ogs_topology(('X', 'Y'))
        topology = NetworkTopology(
            topology.countries + (Country('W', 'W'),),
            topology.nodes + (Node('w1', 'W', NodeKind.RELAY, 30.0, 10.0),),
        )
        with pytest.raises(InvalidSatelliteInputError, match='on both sides'):
            validate_satellite_inputs(topology, [], [SatRequest('R', 'X', 'X', 1e6, deadline=1)])
        with pytest.raises(InvalidSatelliteInputError, match='owns no ground station'):
            validate_satellite_inputs(topology, [], [SatRequest('R', 'X', 'W', 1e6, deadline=1)])

    def test_scheduler_validates_first(self):
        topology = ogs_topology()
        with pytest.raises(InvalidSatelliteInputError):
            schedule_passes(topology, [Pass('p1', 'S1', 'nowhere', 0, 1e6)], [])
