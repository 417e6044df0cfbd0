"""Shared scenario builders for solver, harness and acceptance tests."""
import warnings
from pathlib import Path

import numpy as np

from cutplate.beam import BeamSpec
from cutplate.fem import build_space
from cutplate.harness.manufactured import biharmonic_load
from cutplate.mesh import generate_structured_unit_square
from cutplate.plate import PlateSpec
from cutplate.solver import assemble_reinforced

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
E_PLATE = 100.0


def cross_beams(E, ends, c=0.499):
    return [
        BeamSpec((c, 0.0), (c, 1.0), E=E, b=0.1, t=0.1, ends=(ends, ends)),
        BeamSpec((0.0, c), (1.0, c), E=E, b=0.1, t=0.1, ends=(ends, ends)),
    ]


def cross_problem(E=100 * E_PLATE, ends="simply_supported", n=16, beams=True, c=0.499):
    """Simply supported plate, optional crossing beams, the biharmonic load."""
    plate = PlateSpec(E_PLATE, 0.5, 0.1, bc="simply_supported")
    space = build_space(generate_structured_unit_square(n), 2)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return assemble_reinforced(
            space, plate, cross_beams(E, ends, c) if beams else [], load=biharmonic_load(plate)
        )


def mirror_values(space, coeffs, pts):
    return space.evaluate_values(coeffs, pts), space.evaluate_values(coeffs, pts[:, ::-1])


def sample_points(n=40, seed=0):
    return np.random.default_rng(seed).uniform(0.01, 0.99, (n, 2))
