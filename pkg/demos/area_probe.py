"""Area probe: {w = 0} has locally finite area, the graph z = e^{1/w} does not.

The e^{1/w} graph winds around w = 0 infinitely often; cutting it at distance
delta from {w = 0} and shrinking delta by 4 roughly quadruples its area.

    python demos/area_probe.py
"""
import numpy as np

from jcurrents.janalytic import area_probe, exp_graph, line_w0

DELTAS = (0.1, 0.025, 0.00625)


def show(name, stratum, center):
    pr = area_probe(stratum, center, deltas=DELTAS)
    masses = "  ".join(f"{m:.4f}" for m in pr.masses)
    ratios = "  ".join(f"{r:.2f}" for r in pr.ratios)
    verdict = "diverges" if pr.diverges else "stable"
    print(f"{name:<14} areas {masses}   growth {ratios}   -> {verdict}")


def main():
    show("{w=0}", line_w0(puncture=True).top, np.zeros(4))
    show("z = e^(1/w)", exp_graph().top, np.array([1.5, 0.0, 0.0, 0.0]))


if __name__ == "__main__":
    main()
