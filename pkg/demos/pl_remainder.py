"""Regularized Monge-Ampere masses of log|w|^2 and the remainder term.

For the standard structure the eps -> 0 limit reproduces <[w=0], psi>; for the
twisted structures the difference (the remainder) is nonzero and scales like
lambda.  This takes a few minutes.

    python demos/pl_remainder.py
"""
from jcurrents.algebra import dz, dzbar, wedge
from jcurrents.geometry import Box
from jcurrents.plelong import pl_limit
from jcurrents.quadrature import QuadratureConfig
from jcurrents.specs import defining_map
from jcurrents.structures import make_standard, make_twisted
from jcurrents.testforms import make_test_form


def main():
    cfg = QuadratureConfig(abs_tol=1e-9, rel_tol=1e-7)
    # dz ^ dzbar + dz ^ dwbar mixes the directions along and across {w = 0}
    coef = (wedge(dz(2, 0), dzbar(2, 0)) + wedge(dz(2, 0), dzbar(2, 1))) * 0.5j
    psi = make_test_form(coef, Box.around((0.05, -0.02, 0.07, 0.04), 0.3))
    for J in (make_standard(2), make_twisted(0.2), make_twisted(0.1)):
        rep = pl_limit(defining_map({"kind": "w"}, J), psi, cfg=cfg)
        print(f"{J.name:<9} {J.params or '':<16} limit/kappa = {rep.normalized.real:.8f}"
              f"  <[Z],psi> = {rep.z_pairing.real:.8f}  remainder = {rep.remainder.real:+.3e}")


if __name__ == "__main__":
    main()
