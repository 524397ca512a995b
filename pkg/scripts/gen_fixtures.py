#!/usr/bin/env python3
"""Regenerate the frozen oracle fixtures under tests/fixtures/.

The grid-scan argmins are the independent reference the solver tests compare
against; they are produced by the exhaustive 1-D scan, never by the solver,
and committed so the expected values cannot drift silently.
"""

import json
import os

from ctls.model import PartitionSpec, generate_model, observe
from ctls.oracle import grid_scan_tls_1d

GRID_LO, GRID_HI, GRID_NUM = -10.0, 10.0, 100001

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")


def tls_1d_grid_fixture() -> dict:
    instances = []
    sigmas = (0.1, 0.3, 0.5)
    for i in range(10):
        m = 50 if i % 2 == 0 else 120
        sigma = sigmas[i % 3]
        model_seed = 42_000 + i
        noise_seed = 43_000 + i
        partition = PartitionSpec(j=0, k=0, n=1, ell=1, m=m)
        model = generate_model(partition, sigma, model_seed)
        data = observe(model, noise_seed)
        x_min, q_min = grid_scan_tls_1d(data.a, data.b, GRID_LO, GRID_HI, GRID_NUM)
        instances.append(
            {
                "m": m,
                "sigma": sigma,
                "model_seed": model_seed,
                "noise_seed": noise_seed,
                "grid_argmin": x_min,
                "grid_min_value": q_min,
            }
        )
    return {
        "version": 1,
        "grid": {"lo": GRID_LO, "hi": GRID_HI, "num": GRID_NUM},
        "instances": instances,
    }


def main() -> None:
    os.makedirs(FIXTURE_DIR, exist_ok=True)
    path = os.path.join(FIXTURE_DIR, "tls_1d_grid.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tls_1d_grid_fixture(), fh, indent=1)
        fh.write("\n")
    print(f"wrote {os.path.normpath(path)}")


if __name__ == "__main__":
    main()
