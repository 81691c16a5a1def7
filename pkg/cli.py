"""
Federated QCI Planner - Command Line

Usage:
    python cli.py validate data/fig1.json
    python cli.py diagnose data/fig1.json --out out/
    python cli.py plan data/fig5.json --objective min-cost --out out/
    python cli.py vnet data/fig5.json --solution out/solution.json
    python cli.py satsched data/satellite-3x6x4.json
    python cli.py survive data/euroqci-toy.json --solution out/solution.json

Reports go to stdout, logs to stderr; artifacts are written only under --out
(or $FEDQCI_OUT).
"""

import argparse
import logging
import sys
from pathlib import Path

from utils import feasibility, planner, reports, satellite, scenario_io, vnet
from utils.config import (
    EXIT_FINDINGS, EXIT_INPUT_ERROR, EXIT_OK, FLOW_TOL, configure_logging, get_output_dir
)
from utils.errors import (
    FedQciError, InfeasibleDesignError, InfeasibleInputError, OvercommittedError, ScenarioError,
    ScenarioIssue
)
from utils.topology import DiagnosticCode, validate_topology


logger = logging.getLogger('fedqci.cli')

# Structural warnings that do not by themselves make a scenario unservable
ADVISORY_CODES = {DiagnosticCode.BRIDGE_LINK, DiagnosticCode.ARTICULATION_NODE}

OBJECTIVES = {
    'min-cost': planner.Objective.MIN_COST,
    'max-served': planner.Objective.MAX_SERVED,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog='fedqci', description='Federated quantum communication infrastructure planner'
    )
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG logs')
    parser.add_argument('--out', default=None, help='Directory for artifacts (default: $FEDQCI_OUT or none)')
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('validate', help='Topology and scenario invariant checks')
    p.add_argument('scenario')

    p = commands.add_parser('diagnose', help='Feasibility report per use-case')
    p.add_argument('scenario')

    p = commands.add_parser('plan', help='Solve the design MILP')
    p.add_argument('scenario')
    p.add_argument('--objective', choices=sorted(OBJECTIVES), default=None)
    p.add_argument('--budget', type=float, default=None)

    p = commands.add_parser('vnet', help='Virtual-network allocations for a saved design')
    p.add_argument('scenario')
    p.add_argument('--solution', required=True)
    p.add_argument('--reserve', action='append', default=[], metavar='LINK=FRACTION',
                   help='Override the custom reserve of a cross-border link (repeatable)')

    p = commands.add_parser('satsched', help='Satellite pass schedule')
    p.add_argument('scenario')
    p.add_argument('--passes', default=None, help='CSV pass table replacing the scenario passes')

    p = commands.add_parser('survive', help='Single-link failure analysis of a saved design')
    p.add_argument('scenario')
    p.add_argument('--solution', required=True)

    # --out and -v are accepted after the subcommand as well
    for sub in commands.choices.values():
        sub.add_argument('--out', default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        sub.add_argument('-v', '--verbose', action='count', default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    return parser


def _section(title, body):
    print(f"== {title} ==")
    print(body)


def _write_text(out_dir, name, text):
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding='utf-8')
    logger.info('wrote %s', path)


def _read_solution(path, problem):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as exc:
        raise ScenarioError([ScenarioIssue('SYNTAX', f"cannot read {path}: {exc}")])
    solution = scenario_io.read_solution_json(text)
    scenario_io.check_solution_references(problem, solution)
    return solution


def cmd_validate(args, out_dir):
    problem = scenario_io.load_scenario(args.scenario, strict=False)
    diagnostics = validate_topology(problem.topology)
    issues = planner.validate_problem(problem)
    _section('topology', reports.frame_to_text(reports.diagnostics_frame(diagnostics)))
    _section('scenario', '\n'.join(f"{subject}: {msg}" for subject, msg in issues) or '(none)')
    if out_dir:
        reports.write_csv(reports.diagnostics_frame(diagnostics), out_dir, 'validation.csv')
    return EXIT_FINDINGS if diagnostics or issues else EXIT_OK


def cmd_diagnose(args, out_dir):
    problem = scenario_io.load_scenario(args.scenario)
    diagnostics = feasibility.diagnose_scenario(problem)
    frame = reports.diagnostics_frame(diagnostics)
    _section('diagnostics', reports.frame_to_text(frame))
    if out_dir:
        reports.write_csv(frame, out_dir, 'diagnostics.csv')
        witness = sorted({node for d in diagnostics if d.code not in ADVISORY_CODES for node in d.witness})
        _write_text(out_dir, 'diagnose.dot', scenario_io.emit_dot(problem.topology, highlight=witness))
    blocking = [d for d in diagnostics if d.code not in ADVISORY_CODES]
    return EXIT_FINDINGS if blocking else EXIT_OK


def cmd_plan(args, out_dir):
    overrides = {}
    if args.objective:
        overrides['objective'] = OBJECTIVES[args.objective]
    if args.budget is not None:
        overrides['budget'] = args.budget
    problem = scenario_io.load_scenario(args.scenario, overrides=overrides)

    model = planner.formulate(problem)
    if out_dir:
        _write_text(out_dir, 'model.lp', planner.model_to_lp_text(model))
    solution = planner.solve(problem)

    print(f"objective: {problem.objective.value}")
    print(f"total_cost: {solution.total_cost:.6f}")
    print(f"built: {', '.join(solution.built) or '(none)'}")
    print(f"branch_and_bound_nodes: {solution.nodes_explored}")
    served = reports.served_frame(problem, solution)
    _section('service', reports.frame_to_text(served))
    _section('budget', reports.frame_to_text(reports.budget_frame(solution)))
    flows = reports.flows_frame(solution, problem.topology)
    _section('flows', reports.frame_to_text(flows))

    violations = planner.check_solution(problem, solution)
    for message in violations:
        logger.warning('solution check: %s', message)

    if out_dir:
        _write_text(out_dir, 'solution.json', scenario_io.write_solution_json(solution))
        reports.write_csv(flows, out_dir, 'flows.csv')
        reports.write_csv(reports.budget_frame(solution), out_dir, 'budget.csv')
        _write_text(out_dir, 'design.dot', scenario_io.emit_dot(problem.topology, solution))
    # max-served designs may leave demand unserved
    return EXIT_FINDINGS if (served['shortfall'] > FLOW_TOL).any() else EXIT_OK


def _parse_reserves(values):
    reserves = {}
    for value in values:
        link_id, sep, fraction = value.partition('=')
        if not sep:
            raise planner.ProblemDefinitionError(f"--reserve expects LINK=FRACTION, got {value!r}")
        try:
            reserves[link_id] = float(fraction)
        except ValueError:
            raise planner.ProblemDefinitionError(f"reserve fraction {fraction!r} is not a number", link_id)
    return reserves


def cmd_vnet(args, out_dir):
    problem = scenario_io.load_scenario(args.scenario)
    solution = _read_solution(args.solution, problem)
    allocations = vnet.allocate_vnets(problem, solution, _parse_reserves(args.reserve))
    violations = vnet.enforcement_check(allocations, solution, problem)
    frame = reports.allocations_frame(allocations)
    _section('allocations', reports.frame_to_text(frame))
    _section('enforcement', reports.frame_to_text(reports.violations_frame(violations)))
    if out_dir:
        reports.write_csv(frame, out_dir, 'vnet.csv')
    return EXIT_FINDINGS if violations else EXIT_OK


def cmd_satsched(args, out_dir):
    problem = scenario_io.load_scenario(args.scenario)
    section = problem.satellite or satellite.SatelliteSection()
    passes = reports.load_passes_csv(args.passes) if args.passes else section.passes
    schedule = satellite.schedule_passes(problem.topology, passes, section.requests, problem.window_duration_s)
    frame = reports.schedule_frame(schedule)
    delivery = reports.delivery_frame(schedule, section.requests)
    _section('schedule', reports.frame_to_text(frame))
    _section('delivery', reports.frame_to_text(delivery))
    if out_dir:
        reports.write_csv(frame, out_dir, 'schedule.csv')
        reports.write_csv(delivery, out_dir, 'delivery.csv')
    return EXIT_OK if delivery['served'].all() else EXIT_FINDINGS


def cmd_survive(args, out_dir):
    problem = scenario_io.load_scenario(args.scenario)
    solution = _read_solution(args.solution, problem)
    report = feasibility.survivability_report(problem, solution)
    frame = reports.survivability_frame(report)
    _section('survivability', reports.frame_to_text(frame))
    if out_dir:
        reports.write_csv(frame, out_dir, 'survivability.csv')
    return EXIT_FINDINGS if report else EXIT_OK


COMMANDS = {
    'validate': cmd_validate,
    'diagnose': cmd_diagnose,
    'plan': cmd_plan,
    'vnet': cmd_vnet,
    'satsched': cmd_satsched,
    'survive': cmd_survive,
}


def cli_main(argv=None):
    """
    Run one CLI command.

    Args:
        argv: Argument list without the program name (default: sys.argv[1:])

    Returns:
        int: 0 success, 1 infeasible or findings, 2 input error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT_ERROR

    configure_logging(args.verbose)
    out_dir = get_output_dir(args.out)

    try:
        return COMMANDS[args.command](args, out_dir)
    except ScenarioError as exc:
        for issue in exc.issues:
            print(f"error: {issue}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (InfeasibleDesignError, InfeasibleInputError, OvercommittedError) as exc:
        print(f"result: {exc}")
        return EXIT_FINDINGS
    except FedQciError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(cli_main())
