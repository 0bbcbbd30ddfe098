"""How much decoration lowers the fusing temperature.

Anneals bare and DA-decorated films of several wire diameters on a 10 K grid
and reports the lowest temperature at which the median resistance rises
100000-fold.  Uses small films so it finishes in well under a minute.

    python demos/fusing_shift.py
"""
import numpy as np

from gtepattern.calibration import load_calibration
from gtepattern.pipeline import celsius_grid, fusing_temperature_sweep


def main():
    cal = load_calibration()
    results = fusing_temperature_sweep(
        cal, celsius_grid(20.0, 320.0, 10.0), variants=("raw", "da"), replicas=3, seed=5, wires_per_replica=3000
    )
    tf = {(r.variant, r.diameter): r.tf_celsius for r in results}
    diameters = sorted({r.diameter for r in results})
    print("diameter   raw Tf   DA Tf   shift  (C)")
    for d in diameters:
        print(f"{d:6.0f} nm  {tf['raw', d]:6.0f}  {tf['da', d]:6.0f}  {tf['raw', d] - tf['da', d]:6.0f}")
    print(f"mean shift {np.mean([tf['raw', d] - tf['da', d] for d in diameters]):.1f} C")


if __name__ == "__main__":
    main()
