"""
Federated QCI Planner - Scenario Generation Script

Builds the bundled scenario fixtures and writes them to data/:
- fig1.json: four countries, a clearance-blocked link and an internally
  disconnected country on the only route between two user sites
- fig5.json: a transit country sharing 20% of its national link
- euroqci-toy.json: Greece - Bulgaria - Romania - Hungary chain with a
  candidate bypass inside Bulgaria and a point-to-point Romania
- satellite-3x6x4.json: 3 satellites, 6 windows, 4 requests over six
  ground stations in three countries

Also produces small seeded random scenarios for the property tests.

Usage:
    python data/generate_scenarios.py
"""

import sys
from itertools import combinations
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from utils.planner import DesignProblem, Objective, UseCase  # noqa: E402
from utils.satellite import Pass, SatelliteSection, SatRequest  # noqa: E402
from utils.scenario_io import serialize_scenario  # noqa: E402
from utils.topology import (  # noqa: E402
    Country, Link, LinkKind, LinkStatus, NetworkTopology, Node, NodeKind,
    PercentagePolicy, PointToPointPolicy
)


BORDER = NodeKind.BORDER
SITE = NodeKind.USER_SITE
RELAY = NodeKind.RELAY
OGS = NodeKind.OGS
CANDIDATE = LinkStatus.CANDIDATE


class ScenarioGenerator:
    """Builds fixture and random DesignProblems."""

    def __init__(self, seed=42):
        # Configuration
        self.seed = seed
        self.output_dir = Path(__file__).resolve().parent
        self.link_capacity = 1000.0

        # Random scenario limits
        self.max_nodes = 6
        self.max_candidates = 5
        self.max_use_cases = 2
        self.max_windows = 2

    def fig1(self):
        """The only route from A to D crosses a clearance-2 link in B and a split C."""
        cap = self.link_capacity
        topology = NetworkTopology(
            countries=[Country('A', 'Country A'), Country('B', 'Country B'),
                       Country('C', 'Country C'), Country('D', 'Country D')],
            nodes=[
                Node('a_site', 'A', SITE, 0.0, 0.0),
                Node('a_border', 'A', BORDER, 0.0, 0.9),
                Node('b1', 'B', BORDER, 0.0, 1.8),
                Node('b3', 'B', RELAY, 0.6, 2.25),
                Node('b2', 'B', BORDER, 0.0, 2.7),
                Node('c1', 'C', BORDER, 0.0, 3.6),
                Node('c2', 'C', BORDER, 0.0, 4.5),
                Node('d_border', 'D', BORDER, 0.0, 5.4),
                Node('d_site', 'D', SITE, 0.0, 6.3),
            ],
            links=[
                Link('L_a', 'a_site', 'a_border', cap),
                Link('L_ab', 'a_border', 'b1', cap),
                Link('L_b_yellow', 'b1', 'b2', cap, required_clearance=2),
                Link('L_bc', 'b2', 'c1', cap),
                Link('L_cd', 'c2', 'd_border', cap),
                Link('L_d', 'd_border', 'd_site', cap),
                Link('N_b13', 'b1', 'b3', cap, CANDIDATE, build_cost=30.0),
                Link('N_b32', 'b3', 'b2', cap, CANDIDATE, build_cost=30.0),
                Link('N_c12', 'c1', 'c2', cap, CANDIDATE, build_cost=100.0),
            ],
        )
        use_cases = [UseCase('uc_ad', ('a_site', 'd_site'), 100.0, clearance=1)]
        return DesignProblem(topology, use_cases)

    def fig5(self, fraction=0.2):
        """B shares ``fraction`` of its national link with the A-C use-case."""
        cap = self.link_capacity
        topology = NetworkTopology(
            countries=[Country('A', 'Country A'),
                       Country('B', 'Country B', PercentagePolicy(fraction)),
                       Country('C', 'Country C')],
            nodes=[
                Node('a_site', 'A', SITE, 0.0, 0.0),
                Node('a_border', 'A', BORDER, 0.0, 0.9),
                Node('b_west', 'B', BORDER, 0.0, 1.8),
                Node('b_east', 'B', BORDER, 0.0, 2.7),
                Node('c_border', 'C', BORDER, 0.0, 3.6),
                Node('c_site', 'C', SITE, 0.0, 4.5),
            ],
            links=[
                Link('L_a', 'a_site', 'a_border', cap),
                Link('L_ab', 'a_border', 'b_west', cap),
                Link('L_b', 'b_west', 'b_east', cap),
                Link('L_bc', 'b_east', 'c_border', cap),
                Link('L_c', 'c_border', 'c_site', cap),
            ],
        )
        use_cases = [
            UseCase('uc_national', ('b_west', 'b_east'), 0.8 * cap),
            UseCase('uc_ac', ('a_site', 'c_site'), 0.2 * cap),
        ]
        return DesignProblem(topology, use_cases)

    def euroqci_toy(self):
        """Greece to Hungary through Bulgaria (50% shared) and Romania (point-to-point)."""
        cap = 10000.0
        lon = 23.7
        topology = NetworkTopology(
            countries=[
                Country('BG', 'Bulgaria', PercentagePolicy(0.5)),
                Country('GR', 'Greece'),
                Country('HU', 'Hungary'),
                Country('RO', 'Romania', PointToPointPolicy((('ro_south', 'ro_north', 8000.0),))),
            ],
            nodes=[
                Node('gr_site', 'GR', SITE, 37.9, lon, security_level=2),
                Node('gr_relay', 'GR', RELAY, 39.0, lon, security_level=2),
                Node('gr_border', 'GR', BORDER, 40.1, lon, security_level=2),
                Node('bg_south', 'BG', BORDER, 41.2, lon, security_level=1),
                Node('bg_relay', 'BG', RELAY, 42.3, lon, security_level=1),
                Node('bg_alt', 'BG', RELAY, 42.3, 24.9, security_level=1),
                Node('bg_north', 'BG', BORDER, 43.4, lon, security_level=1),
                Node('ro_south', 'RO', BORDER, 44.5, lon, security_level=1),
                Node('ro_relay', 'RO', RELAY, 45.6, lon, security_level=1),
                Node('ro_north', 'RO', BORDER, 46.7, lon, security_level=1),
                Node('hu_border', 'HU', BORDER, 47.8, lon, security_level=2),
                Node('hu_site', 'HU', SITE, 48.9, lon, security_level=2),
            ],
            links=[
                Link('gr_1', 'gr_site', 'gr_relay', cap, security_level=2),
                Link('gr_2', 'gr_relay', 'gr_border', cap, security_level=2),
                Link('gr_bg', 'gr_border', 'bg_south', cap, security_level=1),
                Link('bg_1', 'bg_south', 'bg_relay', cap, security_level=1),
                Link('bg_2', 'bg_relay', 'bg_north', cap, security_level=1),
                Link('bg_ro', 'bg_north', 'ro_south', cap, security_level=1),
                Link('ro_1', 'ro_south', 'ro_relay', cap, security_level=1),
                Link('ro_2', 'ro_relay', 'ro_north', cap, security_level=1),
                Link('ro_hu', 'ro_north', 'hu_border', cap, security_level=1),
                Link('hu_1', 'hu_border', 'hu_site', cap, security_level=2),
                Link('bg_alt_1', 'bg_south', 'bg_alt', cap, CANDIDATE, build_cost=500.0, security_level=1),
                Link('bg_alt_2', 'bg_alt', 'bg_north', cap, CANDIDATE, build_cost=500.0, security_level=1),
            ],
        )
        use_cases = [
            UseCase('uc_gr_hu', ('gr_site', 'hu_site'), 6000.0, schedule=(0, 1), min_security_level=1),
            UseCase('uc_gr_bg', ('gr_site', 'bg_north'), 500.0, schedule=(0,)),
        ]
        return DesignProblem(topology, use_cases, num_windows=2)

    def satellite_3x6x4(self):
        """Three satellites carry keys between six ground stations of X, Y and Z over six windows."""
        topology = NetworkTopology(
            countries=[Country('X', 'Country X'), Country('Y', 'Country Y'), Country('Z', 'Country Z')],
            nodes=[
                Node('x_site', 'X', SITE, 48.0, 10.0),
                Node('x_ogs1', 'X', OGS, 48.5, 10.5),
                Node('x_ogs2', 'X', OGS, 47.5, 9.5),
                Node('y_site', 'Y', SITE, 52.0, 5.0),
                Node('y_ogs1', 'Y', OGS, 52.5, 5.5),
                Node('y_ogs2', 'Y', OGS, 51.5, 4.5),
                Node('z_site', 'Z', SITE, 41.0, 15.0),
                Node('z_ogs1', 'Z', OGS, 41.5, 15.5),
                Node('z_ogs2', 'Z', OGS, 40.5, 14.5),
            ],
            links=[
                Link('L_x', 'x_site', 'x_ogs1', 5000.0),
                Link('L_y', 'y_site', 'y_ogs1', 5000.0),
                Link('L_z', 'z_site', 'z_ogs1', 5000.0),
                Link('F_xy', 'x_ogs1', 'y_ogs1', 100.0, kind=LinkKind.SATELLITE_FEED),
                Link('F_yz', 'y_ogs2', 'z_ogs1', 100.0, kind=LinkKind.SATELLITE_FEED),
                Link('F_xz', 'x_ogs2', 'z_ogs2', 100.0, kind=LinkKind.SATELLITE_FEED),
            ],
        )
        passes = [
            Pass('p-s1-0', 'S1', 'x_ogs1', 0, 3.6e6),
            Pass('p-s1-1', 'S1', 'y_ogs1', 1, 3.6e6),
            Pass('p-s1-3', 'S1', 'x_ogs1', 3, 2.0e6, weather_factor=0.5),
            Pass('p-s1-4', 'S1', 'y_ogs1', 4, 3.6e6),
            Pass('p-s2-0', 'S2', 'y_ogs2', 0, 2.0e6),
            Pass('p-s2-1', 'S2', 'z_ogs1', 1, 2.0e6),
            Pass('p-s2-3', 'S2', 'y_ogs2', 3, 2.0e6),
            Pass('p-s2-5', 'S2', 'z_ogs1', 5, 2.0e6),
            Pass('p-s3-0', 'S3', 'z_ogs2', 0, 1.0e6),
            Pass('p-s3-1', 'S3', 'x_ogs2', 1, 1.0e6),
            Pass('p-s3-2', 'S3', 'z_ogs2', 2, 1.0e6),
        ]
        requests = [
            SatRequest('R-XY', 'X', 'Y', 7.2e6, priority=1.0, deadline=5),
            SatRequest('R-XZ', 'X', 'Z', 1.0e6, priority=2.0, deadline=3),
            SatRequest('R-YZ', 'Y', 'Z', 2.0e6, priority=1.0, deadline=3),
            SatRequest('R-ZY', 'Z', 'Y', 1.5e6, priority=1.0, deadline=5),
        ]
        use_cases = [UseCase('uc_xy', ('x_site', 'y_site'), 500.0, schedule=(1,))]
        return DesignProblem(
            topology, use_cases, num_windows=6, satellite=SatelliteSection(passes, requests)
        )

    def random_scenario(self, seed=None, objective=Objective.MIN_COST):
        """
        Small random instance: up to 6 border nodes in 2-3 countries, up to 5
        candidate links, up to 2 use-cases over up to 2 windows.

        Args:
            seed: Seed for this instance (default: the generator seed)
            objective: Objective of the returned problem

        Returns:
            DesignProblem
        """
        rng = np.random.default_rng(self.seed if seed is None else seed)
        num_countries = int(rng.integers(2, 4))
        num_nodes = int(rng.integers(num_countries + 1, self.max_nodes + 1))

        countries = []
        for i in range(num_countries):
            policy = PercentagePolicy(0.5) if rng.random() < 0.3 else None
            countries.append(Country(f"K{i}", f"Country {i}", policy))

        nodes = []
        for i in range(num_nodes):
            country = i % num_countries
            nodes.append(Node(f"n{i}", f"K{country}", BORDER, 0.3 * (i // num_countries), 0.3 * country))

        links = []
        candidates = 0
        for a, b in combinations(range(num_nodes), 2):
            if rng.random() > 0.55:
                continue
            capacity = float(rng.integers(1, 11)) * 10.0
            if candidates < self.max_candidates and rng.random() < 0.4:
                candidates += 1
                links.append(Link(f"e{a}_{b}", f"n{a}", f"n{b}", capacity, CANDIDATE,
                                  build_cost=float(rng.integers(1, 11))))
            else:
                links.append(Link(f"e{a}_{b}", f"n{a}", f"n{b}", capacity))

        num_windows = int(rng.integers(1, self.max_windows + 1))
        use_cases = []
        for k in range(int(rng.integers(1, self.max_use_cases + 1))):
            a, b = rng.choice(num_nodes, size=2, replace=False)
            schedule = tuple(w for w in range(num_windows) if rng.random() < 0.7) or (0,)
            use_cases.append(UseCase(f"u{k}", (f"n{a}", f"n{b}"), float(rng.integers(1, 21)), schedule))

        budget = 10.0 * self.max_candidates if objective == Objective.MAX_SERVED else None
        return DesignProblem(
            NetworkTopology(countries, nodes, links), use_cases,
            objective=objective, budget=budget, num_windows=num_windows,
        )

    def fixtures(self):
        return {
            'fig1.json': self.fig1(),
            'fig5.json': self.fig5(),
            'euroqci-toy.json': self.euroqci_toy(),
            'satellite-3x6x4.json': self.satellite_3x6x4(),
        }

    def generate_all_data(self):
        """Write every fixture to data/"""
        print("Generating scenario fixtures...")
        for name, problem in self.fixtures().items():
            path = self.output_dir / name
            path.write_text(serialize_scenario(problem), encoding='utf-8')
            topology = problem.topology
            print(f"✓ {name}: {len(topology.countries)} countries, {len(topology.nodes)} nodes, "
                  f"{len(topology.links)} links, {len(problem.use_cases)} use-cases")


if __name__ == '__main__':
    ScenarioGenerator().generate_all_data()
