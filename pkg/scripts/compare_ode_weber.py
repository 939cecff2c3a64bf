"""Per-mode final survival from the ODE engine next to the parabolic-cylinder solution.

    python3 scripts/compare_ode_weber.py --delta 0 10 --modes 1 8 64 256 300 512
"""

import argparse

from nqa import analytic, dynamics
from nqa.core import make_params


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, nargs="+", default=[0.0, 1.0, 10.0])
    ap.add_argument("--modes", type=int, nargs="+", default=[1, 8, 64, 256, 300, 512])
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--tau", type=float, default=500.0)
    a = ap.parse_args()
    print(f"{'delta':>7} {'k':>5} {'phi-alpha':>10} {'P_ode':>14} {'P_weber':>14}")
    for d in a.delta:
        p = make_params(0.5, 10.0, d, a.tau, a.N)
        for k in a.modes:
            phi = 3.141592653589793 * (2 * k - 1) / a.N
            P_ode = dynamics.integrate_diabatic(p, k, [0.0, 1.0]).final_survival
            P_w = analytic.weber_survival(p, k)
            print(f"{d:7.2f} {k:5d} {phi - p.alpha:10.4f} {P_ode:14.6e} {P_w:14.6e}")


if __name__ == "__main__":
    main()
