"""Where a silver nanowire soaks up UV light.

Prints the plasmon peak of the heat-generation spectrum of single wires of
several diameters and its overlap with a 350 nm lamp line.  The plasmon peak
stays near 350 nm; for thick wires interband absorption below 300 nm grows
until it rivals the peak.

    python demos/heat_generation.py
"""
import numpy as np

from gtepattern.calibration import load_calibration
from gtepattern.optics import heat_generation_spectrum, load_permittivity, spectral_overlap, uv_source_spectrum


def main():
    cal = load_calibration()
    table = load_permittivity()
    wl = np.arange(250.0, 600.0 + 0.5, 1.0)
    lamp = uv_source_spectrum(wl)
    for d in (17.0, 30.0, 50.0, 90.0):
        hg = heat_generation_spectrum(d, table, wl, cal.medium_index)
        v = hg.values
        bumps = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
        peak = wl[bumps[np.argmax(v[bumps])]]
        print(
            f"d = {d:4.0f} nm  plasmon peak {peak:4.0f} nm  heat at 250 nm {hg.values[0]:.2f} of max  "
            f"lamp overlap {spectral_overlap(lamp, hg):.3f}"
        )


if __name__ == "__main__":
    main()
