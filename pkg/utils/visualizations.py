"""
Visualization Utilities

Reusable Plotly chart functions for the planner dashboard.
"""

import plotly.express as px
import plotly.graph_objects as go

from utils.config import COLORS


def _link_color(topology, link, built):
    if link.is_candidate:
        return COLORS['built'] if link.id in built else COLORS['candidate']
    if topology.is_cross_border(link):
        return COLORS['international']
    return COLORS['national']


def create_topology_map(topology, solution=None, highlight=()):
    """
    Draw nodes and links on a map.

    National links are grey, international orange, candidates light blue
    (green once built); highlighted nodes are red.

    Args:
        topology: NetworkTopology
        solution: Optional DesignSolution whose builds are shown
        highlight: Node ids to draw in red (for example a diagnostic witness)

    Returns:
        plotly Figure
    """
    built = set(solution.built) if solution is not None else set()
    highlight = set(highlight)
    fig = go.Figure()

    for link in topology.links:
        a, b = topology.node_map[link.a], topology.node_map[link.b]
        dash = 'dot' if link.is_candidate and link.id not in built else 'solid'
        fig.add_trace(go.Scattergeo(
            lat=[a.lat, b.lat],
            lon=[a.lon, b.lon],
            mode='lines',
            line=dict(width=3 if link.id in built else 2, color=_link_color(topology, link, built), dash=dash),
            hoverinfo='text',
            text=f"{link.id}: {link.capacity:,.0f} bit/s, clearance {link.required_clearance}",
            showlegend=False,
        ))

    fig.add_trace(go.Scattergeo(
        lat=[n.lat for n in topology.nodes],
        lon=[n.lon for n in topology.nodes],
        mode='markers+text',
        text=[n.id for n in topology.nodes],
        textposition='top center',
        marker=dict(
            size=9,
            color=[COLORS['blocked'] if n.id in highlight else COLORS['federated'] for n in topology.nodes],
            symbol=['triangle-up' if n.kind.value == 'ogs' else 'circle' for n in topology.nodes],
        ),
        hovertext=[f"{n.id} ({n.country}, {n.kind.value}, clearance {n.clearance_level})" for n in topology.nodes],
        hoverinfo='text',
        showlegend=False,
    ))

    fig.update_geos(fitbounds='locations', showcountries=True, showland=True, landcolor='#f5f5f5')
    fig.update_layout(height=500, margin=dict(t=10, b=10, l=10, r=10))
    return fig


def create_vnet_share_chart(allocations_df):
    """
    Stacked bars of national / federated / custom shares per link.

    Args:
        allocations_df: DataFrame from reports.allocations_frame

    Returns:
        plotly Figure
    """
    df = allocations_df.copy()
    df['label'] = df['link'] + ' w' + df['window'].astype(str)
    fig = go.Figure()
    for column, color in (('national', COLORS['national']),
                          ('federated', COLORS['federated']),
                          ('custom', COLORS['custom'])):
        fig.add_trace(go.Bar(x=df['label'], y=df[column], name=column.capitalize(), marker_color=color))

    fig.update_layout(
        barmode='stack',
        xaxis_title='Link / window',
        yaxis_title='Key rate (bit/s)',
        height=400,
        legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
        margin=dict(t=10)
    )
    return fig


def create_budget_chart(budget_df):
    """Bar chart of each country's share of the build cost (TOTAL row dropped)."""
    df = budget_df[budget_df['country'] != 'TOTAL']
    fig = px.bar(df, x='country', y='share', color_discrete_sequence=[COLORS['federated']])
    fig.update_layout(xaxis_title='Country', yaxis_title='Budget share', height=350, margin=dict(t=10))
    return fig


def create_service_chart(served_df):
    """Required against served rate per use-case and window."""
    df = served_df.copy()
    df['label'] = df['use_case'] + ' w' + df['window'].astype(str)
    fig = go.Figure()
    fig.add_trace(go.Bar(x=df['label'], y=df['required'], name='Required', marker_color=COLORS['candidate']))
    fig.add_trace(go.Bar(x=df['label'], y=df['served'], name='Served', marker_color=COLORS['built']))
    fig.update_layout(barmode='group', yaxis_title='Key rate (bit/s)', height=350, margin=dict(t=10))
    return fig


def create_schedule_chart(schedule_df):
    """
    Satellite schedule: one marker per assigned pass pair, sized by bits.

    Args:
        schedule_df: DataFrame from reports.schedule_frame

    Returns:
        plotly Figure
    """
    fig = px.scatter(
        schedule_df, x='window', y='satellite', size='bits', color='request',
        hover_data=['pass_a', 'pass_b', 'ogs_a', 'ogs_b', 'bits'],
    )
    fig.update_layout(xaxis=dict(dtick=1), xaxis_title='Window', yaxis_title='Satellite',
                      height=350, margin=dict(t=10))
    return fig
