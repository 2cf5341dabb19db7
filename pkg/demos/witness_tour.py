"""A walk along |z| through the domain and the witness function.

At each reference modulus we print the fibre disc (centre angle phi, radius
sqrt(r)), the value of f at the fibre centre and at w = 0 when that lies in
the domain, and the resulting g = (f - 110) / 110.

    python demos/witness_tour.py
"""
import cmath
import math

from plurex.hartogs_domain import DomainPoint, eval_phi, eval_r, rho
from plurex.psh_construction import V_VALUE, V_VALUE_AS_PRINTED, eval_f, eval_g


def main():
    print(f"{'|z|':>5} {'r':>8} {'phi':>9} {'f(centre)':>10} {'g(centre)':>10} {'g(w=0)':>8}")
    for t in (1.5, 2.0, 2.5, 4.5, 5.5, 6.5, 7.5, 9.0, 10.5, 12.5, 13.5, 15.0, 16.0, 17.0):
        r, ph = eval_r(t), eval_phi(t)
        if r <= 0:
            print(f"{t:5.1f} {r:8.4f} {ph:9.4f}  empty fibre")
            continue
        centre = DomainPoint(t, cmath.exp(1j * ph))
        at0 = DomainPoint(t, 0j)
        g0 = f"{eval_g(at0):8.4f}" if rho(at0) < 0 else "      --"
        print(f"{t:5.1f} {r:8.4f} {ph:9.4f} {eval_f(centre):10.4f} {eval_g(centre):10.4f} {g0}")
    print()
    print(f"on V (8 < |z| < 10, small |w|) g = {V_VALUE:.6f}; the printed constant {V_VALUE_AS_PRINTED:.6f} "
          f"differs by {abs(V_VALUE - V_VALUE_AS_PRINTED):.6f}")
    print(f"near K (|z| <= 3 or |z| >= 14) g = -1, e.g. g(2.5, e^(-2i)) = {eval_g(DomainPoint(2.5, cmath.exp(-2j)))}")
    top = 102 + math.pi / 2
    print(f"f <= max(phi) + pi/2 = {top:.3f} < 110, so g <= {(top - 110) / 110:.4f} < 0 everywhere")


if __name__ == "__main__":
    main()
