"""
Federated QCI Planner Dashboard
Read-only viewer over the bundled scenarios

Pick a scenario, then browse its topology, feasibility findings, the
min-cost design, the virtual-network split and the satellite schedule.
"""

import logging
from pathlib import Path

import streamlit as st

from utils import feasibility, planner, reports, satellite, scenario_io, vnet
from utils.errors import FedQciError
from utils.topology import validate_topology
from utils.visualizations import (
    create_budget_chart, create_schedule_chart, create_service_chart,
    create_topology_map, create_vnet_share_chart
)


logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / 'data'

# Page config
st.set_page_config(
    page_title="Federated QCI Planner",
    page_icon="🛰️",
    layout="wide",
    initial_sidebar_state="collapsed"
)

# Custom CSS - tab bar and KPI cards
st.markdown("""
<style>
    #MainMenu {visibility: hidden;}
    footer {visibility: hidden;}

    .block-container {
        padding-top: 1rem !important;
        max-width: 100% !important;
    }

    .stTabs [data-baseweb="tab-list"] {
        gap: 12px;
        background: linear-gradient(90deg, #2e7d9e 0%, #3b9fc7 100%);
        padding: 15px 20px;
        border-radius: 8px 8px 0 0;
    }

    .stTabs [data-baseweb="tab"] {
        background: rgba(255, 255, 255, 0.2);
        color: white;
        border-radius: 6px;
        padding: 12px 24px;
        font-weight: 600;
        flex: 1;
        text-align: center;
    }

    .stTabs [aria-selected="true"] {
        background: white !important;
        color: #2e7d9e !important;
        font-weight: 700;
    }

    .sidebar-content {
        background: linear-gradient(135deg, #d4e6f1 0%, #aed6f1 100%);
        padding: 25px;
        border-radius: 10px;
        margin-bottom: 15px;
    }

    .sidebar-header {
        background: #5d3a9b;
        color: white;
        padding: 12px 15px;
        border-radius: 6px;
        font-weight: 700;
        text-align: center;
        margin-bottom: 15px;
    }

    .kpi-card {
        background: white;
        border: 2px solid #e2e8f0;
        border-radius: 8px;
        padding: 15px 10px;
        text-align: center;
        height: 110px;
    }

    .kpi-value {
        font-size: 1.7rem;
        font-weight: 800;
        color: #2e7d9e;
    }

    .kpi-label {
        font-size: 0.75rem;
        color: #666;
        font-weight: 600;
        text-transform: uppercase;
    }
</style>
""", unsafe_allow_html=True)


def kpi_card(column, label, value):
    column.markdown(
        f'<div class="kpi-card"><div class="kpi-value">{value}</div><div class="kpi-label">{label}</div></div>',
        unsafe_allow_html=True,
    )


@st.cache_data
def list_scenarios():
    return sorted(p.name for p in DATA_DIR.glob('*.json'))


@st.cache_resource
def load_problem(name):
    return scenario_io.load_scenario(DATA_DIR / name)


@st.cache_resource
def solve_problem(name):
    """Solve once per scenario; returns (solution, error message)."""
    try:
        return planner.solve(load_problem(name)), None
    except FedQciError as exc:
        return None, str(exc)


scenarios = list_scenarios()
if not scenarios:
    st.error("No scenarios found. Please run: `python data/generate_scenarios.py`")
    st.stop()

sidebar_col, main_col = st.columns([1, 3])

with sidebar_col:
    st.markdown('<div class="sidebar-header">SCENARIO</div>', unsafe_allow_html=True)
    name = st.selectbox('Scenario file', scenarios)
    try:
        problem = load_problem(name)
    except FedQciError as exc:
        st.error(f"Could not load {name}: {exc}")
        st.stop()

    topology = problem.topology
    st.markdown(f"""
    <div class="sidebar-content">
        <strong>{len(topology.countries)}</strong> countries<br>
        <strong>{len(topology.nodes)}</strong> nodes<br>
        <strong>{len(topology.links)}</strong> links
        ({sum(link.is_candidate for link in topology.links)} candidates)<br>
        <strong>{len(problem.use_cases)}</strong> use-cases over {problem.num_windows} window(s)
    </div>
    """, unsafe_allow_html=True)

solution, solve_error = solve_problem(name)

with main_col:
    tab1, tab2, tab3, tab4, tab5 = st.tabs(
        ["🗺️ Topology", "🔎 Feasibility", "🏗️ Design", "🔀 VNets", "🛰️ Satellite"]
    )

    with tab1:
        st.plotly_chart(create_topology_map(topology, solution), use_container_width=True)
        issues = validate_topology(topology)
        if issues:
            st.dataframe(reports.diagnostics_frame(issues), use_container_width=True, hide_index=True)
        else:
            st.success("Topology passes every validation rule.")

    with tab2:
        diagnostics = feasibility.diagnose_scenario(problem)
        witness = sorted({n for d in diagnostics for n in d.witness})
        col1, col2 = st.columns([2, 1])
        with col1:
            st.plotly_chart(create_topology_map(topology, highlight=witness), use_container_width=True)
        with col2:
            st.dataframe(reports.diagnostics_frame(diagnostics), use_container_width=True, hide_index=True)

    with tab3:
        if solution is None:
            st.warning(f"No design: {solve_error}")
        else:
            kpi1, kpi2, kpi3 = st.columns(3)
            kpi_card(kpi1, 'Total cost', f"{solution.total_cost:,.0f}")
            kpi_card(kpi2, 'Builds', len(solution.built))
            kpi_card(kpi3, 'B&B nodes', solution.nodes_explored)
            col1, col2 = st.columns(2)
            with col1:
                st.plotly_chart(create_budget_chart(reports.budget_frame(solution)), use_container_width=True)
            with col2:
                st.plotly_chart(create_service_chart(reports.served_frame(problem, solution)),
                                use_container_width=True)
            st.dataframe(reports.flows_frame(solution, topology), use_container_width=True, hide_index=True)

    with tab4:
        if solution is None:
            st.warning("Allocations need a design.")
        else:
            try:
                allocations = vnet.allocate_vnets(problem, solution)
            except FedQciError as exc:
                st.error(str(exc))
            else:
                frame = reports.allocations_frame(allocations)
                st.plotly_chart(create_vnet_share_chart(frame), use_container_width=True)
                violations = vnet.enforcement_check(allocations, solution, problem)
                if violations:
                    st.dataframe(reports.violations_frame(violations), use_container_width=True, hide_index=True)
                else:
                    st.success("Every flow fits its virtual sub-link.")

    with tab5:
        section = problem.satellite
        if section is None or not section.passes:
            st.info("This scenario has no satellite pass table.")
        else:
            schedule = satellite.schedule_passes(
                topology, section.passes, section.requests, problem.window_duration_s
            )
            frame = reports.schedule_frame(schedule)
            if not frame.empty:
                st.plotly_chart(create_schedule_chart(frame), use_container_width=True)
            st.dataframe(reports.delivery_frame(schedule, section.requests), use_container_width=True,
                         hide_index=True)
