"""Lelong numbers of [w = 0], a smooth current and their sum, at the origin.

Prints the density profile nu(r) on a short radius grid and the extrapolated
value at r = 0 for the standard and a twisted structure.

    python demos/lelong_numbers.py
"""
import numpy as np

from jcurrents.lelong import lelong_number
from jcurrents.quadrature import QuadratureConfig
from jcurrents.specs import current
from jcurrents.structures import adapted_chart, make_standard, make_twisted

CURRENTS = {
    "[w=0]": {"kind": "integration"},
    "smooth": {"kind": "smooth_constant", "coefficients": {"0,1": 0.7, "2,3": 0.3}},
    "2[w=0] + smooth": {"kind": "sum", "terms": [
        [2.0, {"kind": "integration"}],
        [1.0, {"kind": "smooth_constant", "coefficients": {"0,1": 0.7, "2,3": 0.3}}]]},
}


def main():
    cfg = QuadratureConfig(abs_tol=1e-10, rel_tol=1e-8)
    radii = (0.2, 0.1, 0.05, 0.025)
    for J in (make_standard(2), make_twisted(0.1)):
        chart = adapted_chart(J, np.zeros(4))
        print(f"structure {J.name} {J.params or ''}")
        for name, spec in CURRENTS.items():
            prof, corr = lelong_number(current(spec, J), chart, radii, cfg)
            profile = "  ".join(f"{v:.5f}" for v in prof.values)
            print(f"  {name:<16} nu(r) = {profile}  ->  nu(0) = {prof.nu0:.5f}"
                  f"  (c = {corr.c:g})")


if __name__ == "__main__":
    main()
