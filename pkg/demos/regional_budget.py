"""
How many features does a small region need?

Builds cap Slepian bases for an island-sized cap at increasing band-limits
and compares the retained count K with the size of a global SH basis at the
same resolution.  Then checks that the retained modes really live inside
the cap by measuring their energy on a dense cap quadrature.

    python demos/regional_budget.py
"""
import math

import numpy as np

from geoslepian import CapSpec, angular_distance, eval_slepian, shannon_cap, solve_cap

CENTER = (80.7, 7.9)  # lon, lat
THETA = 1.3026        # degrees; area fraction about 1.29e-4


def main():
    print(f"cap radius {THETA} deg, area fraction {(1 - math.cos(math.radians(THETA))) / 2:.3e}")
    print(f"{'L':>5} {'global dim':>11} {'Shannon N':>10} {'K':>3}")
    for L in (32, 64, 128, 256):
        b = solve_cap(CapSpec(THETA, CENTER, L))
        print(f"{L:>5} {(L + 1) ** 2:>11} {shannon_cap(THETA, L):>10.3f} {b.K:>3}")

    # b is now the L = 256 basis
    print("\nretained eigenvalues:", np.round(b.eigenvalues, 4))

    # Monte Carlo estimate of each mode's energy inside the cap: sample a
    # cap three times wider uniformly by area and sum g^2 * (area / n) over
    # the points that fall inside the true cap.
    rng = np.random.default_rng(0)
    n = 100_000
    outer = 3 * THETA
    cosr = rng.uniform(math.cos(math.radians(outer)), 1.0, n)
    r = np.degrees(np.arccos(cosr))
    az = rng.uniform(0, 360, n)
    lat0, lon0 = np.radians(CENTER[1]), np.radians(CENTER[0])
    d, a = np.radians(r), np.radians(az)
    lat = np.arcsin(np.sin(lat0) * np.cos(d) + np.cos(lat0) * np.sin(d) * np.cos(a))
    lon = lon0 + np.arctan2(np.sin(a) * np.sin(d) * np.cos(lat0),
                            np.cos(d) - np.sin(lat0) * np.sin(lat))
    lon, lat = np.degrees(lon), np.degrees(lat)
    area = 2 * math.pi * (1 - math.cos(math.radians(outer)))
    g2 = eval_slepian(b, lon, lat) ** 2 * (area / n)
    inside = angular_distance(*CENTER, lon, lat) <= THETA
    print("energy inside cap (MC): ", np.round(g2[inside].sum(axis=0), 3))


if __name__ == "__main__":
    main()
