"""Both envelopes on a coarse grid (about two minutes on one core).

Prints the w = 0 profiles of the omega_1 proxy and of omega_2 along |z|,
then the gap report on V.  The default grid of the command-line pipeline is
finer; this one only shows the shape of the result quickly.

    python demos/separation_coarse.py
"""
import math

from plurex import envelope_solver as es


def main():
    grid = es.build_grid(spacing_t=0.2, spacing_w=0.08, delta=0.1)
    r2 = es.solve_omega2(grid)
    r1 = es.solve_omega1_proxy(grid, epsilon=0.1)
    j = grid.u_axis.index(0.0)
    k = grid.v_axis.index(0.0)
    print(f"{'|z|':>5} {'omega1 proxy':>13} {'omega2':>9}")
    for i, t in enumerate(grid.t_axis.coords):
        if abs(t - round(t)) > 1e-9:
            continue
        a, b = r1.field.values[i, j, k], r2.field.values[i, j, k]
        fa = f"{a:13.4f}" if math.isfinite(a) else f"{'--':>13}"
        fb = f"{b:9.4f}" if math.isfinite(b) else f"{'--':>9}"
        print(f"{t:5.1f} {fa} {fb}")
    rep = es.gap_report(r1, r2, grid, epsilon=0.1, min_margin=0.5)
    print()
    for key in ("n_v_nodes", "omega1_proxy_max_on_V", "omega2_min_on_V", "min_gap", "adjusted_gap",
                "theoretical_margin", "pass"):
        print(f"{key:>22}: {rep[key]}")


if __name__ == "__main__":
    main()
