"""The solver on the one-variable model problem.

On the unit disc the envelope of subharmonic u <= 0 with boundary values
-1 on an arc is minus the harmonic measure of the arc.  This script solves
the discrete problem and compares it with the Poisson integral.

    python demos/disc_oracle.py [n]
"""
import math
import sys
import time

from plurex.envelope_solver import disc_analogue_problem, disc_oracle_harmonic_measure, perron_sweep


def main(n=201):
    arc = (0.0, math.pi / 2)
    t0 = time.perf_counter()
    prob = disc_analogue_problem(n, arc)
    res = perron_sweep(prob)
    print(f"n = {n}: {res.iterations} sweeps, residual {res.final_residual:.2e}, {time.perf_counter() - t0:.1f} s")
    ax = prob.grid.u_axis
    h = ax.step
    print(f"{'z0':>14} {'discrete':>10} {'Poisson':>10} {'error':>8}")
    for z in (0j, 0.5, 0.5j, -0.5, 0.3 + 0.3j, 0.6 + 0.2j, -0.4 + 0.4j, 0.7 + 0.5j):
        # nearest node
        u, v = round(z.real / h) * h, round(z.imag / h) * h
        d = res.field.values[0, ax.index(u), ax.index(v)]
        o = disc_oracle_harmonic_measure(complex(u, v), arc)
        label = f"{u:+.2f}{v:+.2f}i"
        print(f"{label:>14} {d:10.4f} {o:10.4f} {d - o:8.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 201)
