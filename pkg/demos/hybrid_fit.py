"""
Global SH features versus a hybrid encoder on a regional target.

The target is a smooth global field plus fine structure confined to a
cap of radius 30 degrees.  A ridge head on plain SH (L=10) cannot see the fine detail;
adding a cap Slepian block at L=40 recovers it with a fraction of the
features a global L=40 basis would need.

    python demos/hybrid_fit.py
"""
import numpy as np

from geoslepian import CapSpec, HybridEncoder, angular_distance, encode_batch, sh_eval, solve_cap
from geoslepian.fitkit import fit_seeds, metrics

CENTER = (10.0, 40.0)
THETA = 30.0


def target(lon, lat, rng):
    coarse = sh_eval(4, lon, lat) @ rng.standard_normal(25)
    fine = sh_eval(30, lon, lat) @ (rng.standard_normal(961) * 0.3)
    taper = np.clip(1 - angular_distance(*CENTER, lon, lat) / THETA, 0, 1) ** 2
    return coarse + taper * fine


def main():
    rng = np.random.default_rng(0)
    n = 6000
    lon = rng.uniform(-180, 180, n)
    lat = np.degrees(np.arcsin(rng.uniform(-1, 1, n)))
    y = target(lon, lat, np.random.default_rng(1))

    cap = solve_cap(CapSpec(THETA, CENTER, 40), "thresh:0.5")
    encoders = {
        "SH L=10": HybridEncoder(10),
        "SH L=20": HybridEncoder(20),
        f"hybrid L_g=10 + cap L_r=40 (K={cap.K})": HybridEncoder(10, [cap]),
    }
    inside = angular_distance(*CENTER, lon, lat) <= THETA
    print(f"{n} points, {inside.mean():.1%} inside the cap\n")
    print(f"{'encoder':<40} {'dim':>5} {'test R2':>8} {'in cap':>7}")
    for name, enc in encoders.items():
        X = encode_batch(enc, lon, lat)
        runs, mean = fit_seeds(X, y, range(3))
        # R2 restricted to test points inside the cap, averaged over seeds
        local = np.mean([metrics(y[r.test_index][inside[r.test_index]],
                                 r.test_pred[inside[r.test_index]])["r2"] for r in runs])
        print(f"{name:<40} {enc.dim:>5} {mean['test']['r2']:>8.3f} {local:>7.3f}")
    print(f"\n(global SH at L=40 would need {41 ** 2} features)")


if __name__ == "__main__":
    main()
