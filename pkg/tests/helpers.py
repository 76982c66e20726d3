"""Shared construction shortcuts for tests."""

from birknet.birkhoffian import assemble
from birknet.configspace import build_chart, initial_state
from birknet.graph import build_graph
from birknet.netlist import parse_netlist


def system_from_text(text, coords=None, case=None, basis=None):
    doc = parse_netlist(text)
    g = build_graph(doc)
    init = initial_state(doc, g, coords=coords, basis=basis)
    cs = build_chart(g, init.c_vec, coords=coords, basis=basis)
    return assemble(cs, doc, case=case), cs, doc, init


def as_expr_netlist(text):
    """Rewrite linear device values as the equivalent expression laws."""
    out = []
    for line in text.splitlines():
        parts = line.split()
        if parts and parts[0][0] in "RLC" and len(parts) == 4 and not line.startswith("."):
            v = parts[3]
            law = {"R": f"{v}*x", "L": f"{v} + 0*x", "C": f"x/{v}"}[parts[0][0]]
            line = f"{parts[0]} {parts[1]} {parts[2]} expr: {law}"
        out.append(line)
    return "\n".join(out) + "\n"
