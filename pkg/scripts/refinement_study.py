"""
Vertical Refinement Study
-------------------------
Observed convergence orders of the elliptic solves:

  - manufactured Dirichlet solutions for constant and tanh-stratified lambda,
  - the analytic Neumann case lambda = 1, g = cos x1,
  - sensitivity of the Neumann case to the truncation height Z_max.

Usage:
    python scripts/refinement_study.py --levels 16 32 64 128
"""

import argparse
import logging
import os
import sys
from typing import Dict, List, Sequence

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np  # noqa: E402

from core.calculus import LambdaProfile  # noqa: E402
from core.elliptic import solve_dirichlet  # noqa: E402
from core.fields import ScalarField3D  # noqa: E402
from core.grid import Grid3D  # noqa: E402
from services.checks import neumann_analytic_error  # noqa: E402

TANH = {"surface": 1.0, "deep": 2.0, "depth": 2.0, "width": 0.5}


def _lambda_and_slope(z: np.ndarray, stratified: bool):
    if not stratified:
        return np.ones_like(z), np.zeros_like(z)
    jump = TANH["deep"] - TANH["surface"]
    s = (z - TANH["depth"]) / TANH["width"]
    value = TANH["surface"] + 0.5 * jump * (1.0 + np.tanh(s))
    slope = 0.5 * jump / (TANH["width"] * np.cosh(s) ** 2)
    return value, slope


def manufactured_error(n_z: int, z_max: float, stratified: bool) -> float:
    """
    Max error of solve_dirichlet for psi = sin(pi z / Z_max) cos(x1).

    The source is (lambda psi')' - psi evaluated analytically.
    """
    grid = Grid3D(1.0, 8, 8, n_z, z_max)
    if stratified:
        profile = LambdaProfile.tanh_stratified(grid, **TANH)
    else:
        profile = LambdaProfile.constant(grid, 1.0)

    z = grid.z_nodes
    a = np.pi / z_max
    lam, slope = _lambda_and_slope(z, stratified)
    vertical = np.sin(a * z)
    source = slope * a * np.cos(a * z) - lam * a ** 2 * vertical - vertical

    wave = np.cos(grid.x1)[np.newaxis]
    f = ScalarField3D.from_physical(grid, source[:, np.newaxis, np.newaxis] * wave)
    exact = vertical[:, np.newaxis, np.newaxis] * wave
    return float(np.max(np.abs(solve_dirichlet(f, profile).physical() - exact)))


def observed_orders(errors: Sequence[float]) -> List[float]:
    return [float(np.log2(coarse / fine)) for coarse, fine in zip(errors, errors[1:]) if fine > 0]


def run_study(levels: Sequence[int], z_max: float) -> Dict[str, Dict[str, List[float]]]:
    study: Dict[str, Dict[str, List[float]]] = {}
    for label, stratified in (("dirichlet_constant", False), ("dirichlet_tanh", True)):
        errors = [manufactured_error(n_z, z_max, stratified) for n_z in levels]
        study[label] = {"errors": errors, "orders": observed_orders(errors)}

    neumann = [neumann_analytic_error(Grid3D(1.0, 8, 8, n_z, z_max)) for n_z in levels]
    study["neumann_analytic"] = {"errors": neumann, "orders": observed_orders(neumann)}

    dz = z_max / levels[-1]
    heights = [0.5 * z_max, z_max, 1.5 * z_max]
    study["neumann_z_max"] = {
        "z_max": heights,
        "errors": [neumann_analytic_error(Grid3D(1.0, 8, 8, int(round(h / dz)), h)) for h in heights],
    }
    return study


def main():
    """Print the refinement tables."""
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--levels", type=int, nargs="+", default=[16, 32, 64, 128])
    parser.add_argument("--z-max", type=float, default=8.0)
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING)
    study = run_study(sorted(args.levels), args.z_max)

    print(f"\n  Vertical refinement, Z_max = {args.z_max:g}, N_z = {sorted(args.levels)}\n")
    for name in ("dirichlet_constant", "dirichlet_tanh", "neumann_analytic"):
        errors = ", ".join(f"{value:.3e}" for value in study[name]["errors"])
        orders = ", ".join(f"{value:.2f}" for value in study[name]["orders"])
        print(f"  {name:<20} errors [{errors}]")
        print(f"  {'':<20} orders [{orders}]")

    print("\n  Neumann error against truncation height (fixed dz)")
    for height, error in zip(study["neumann_z_max"]["z_max"], study["neumann_z_max"]["errors"]):
        print(f"    Z_max = {height:<6g} error = {error:.3e}")
    print()


if __name__ == "__main__":
    main()
