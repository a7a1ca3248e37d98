"""Regenerates multi12.json: a 12-level (v = 0..2, j = 0..3, m = 0) rovibrational
ladder built from HF-like spectroscopic constants.

Dipoles follow dj = +-1 with the m = 0 direction-cosine factor
(j + 1) / sqrt((2j + 1)(2j + 3)) times a vibrational matrix element.
"""
import json
import math

CM = 4.556335252912e-6  # hartree per cm^-1
WE, WEXE, BE, AE = 4138.32, 89.88, 20.9557, 0.798
VIB = {(0, 0): 0.70, (1, 1): 0.69, (2, 2): 0.68, (0, 1): 0.141, (1, 2): 0.19, (0, 2): 0.02}


def energy(v, j):
    h = v + 0.5
    b = BE - AE * h
    return (WE * h - WEXE * h * h + b * j * (j + 1)) * CM


def direction_cosine(j):
    return (j + 1) / math.sqrt((2 * j + 1) * (2 * j + 3))


levels = [(v, j) for v in range(3) for j in range(4)]
e0 = energy(0, 0)
out = {
    "levels": [
        {"id": k, "label": f"v{v}j{j}m0", "energy_au": round(energy(v, j) - e0, 9)}
        for k, (v, j) in enumerate(levels)
    ],
    "dipoles": [],
}
for a, (va, ja) in enumerate(levels):
    for b, (vb, jb) in enumerate(levels):
        if b <= a or abs(ja - jb) != 1:
            continue
        m = VIB[(min(va, vb), max(va, vb))] * direction_cosine(min(ja, jb))
        out["dipoles"].append({"i": a, "j": b, "mu_au": round(m, 6)})

with open("multi12.json", "w") as f:
    json.dump(out, f, indent=2)
    f.write("\n")
