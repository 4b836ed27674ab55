import logging
import os
import sys

import numpy as np
import pandas as pd

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from src.basin_scan import CellClass, GridSpec, scan  # noqa: E402
from src.core import ProductPoint  # noqa: E402
from src.dr_engine import iterate  # noqa: E402
from src.errors import DrZeroError  # noqa: E402
from src.functions import Exponential, SignedPower  # noqa: E402
from src.io import save_dataframe_to_csv  # noqa: E402

logger = logging.getLogger(__name__)


def level_set_data(data_dir: str) -> None:
    """DR trajectory for 0.1*exp(x) - 1 from (0, 0) and V on the plotted window."""
    m = Exponential(0.1, 1.0)
    traj = iterate(m, ProductPoint.of([0.0], 0.0))
    path = os.path.join(data_dir, "level_set_trajectory.csv")
    save_dataframe_to_csv(traj.to_frame(), path)

    xs = np.linspace(-1.0, 5.0, 121)
    rhos = np.linspace(-3.0, 3.0, 121)
    X, R = np.meshgrid(xs, rhos)
    V = X + (m.beta / m.alpha) * np.exp(-X) + 0.5 * R**2
    surface = pd.DataFrame({"x": X.ravel(), "rho": R.ravel(), "V": V.ravel()})
    save_dataframe_to_csv(surface, os.path.join(data_dir, "level_set_surface.csv"))


def basin_data(data_dir: str, resolution: int = 101) -> None:
    """Iteration counts by starting point for f = 3*cbrt(x) and f = x^3/3."""
    spec = GridSpec((-10.0, 10.0), (-10.0, 10.0), (resolution, resolution))
    targets = (
        ("basin_cbrt", SignedPower(3.0, 1.0 / 3.0)),
        ("basin_cube", SignedPower(1.0 / 3.0, 3.0)),
    )
    for name, m in targets:
        grid = scan(m, spec)
        save_dataframe_to_csv(grid.to_frame(), os.path.join(data_dir, f"{name}.csv"))
        logger.info("%s: solved fraction %.3f", name, grid.fraction(CellClass.SOLUTION))


def main():
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    data_dir = os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(data_dir, exist_ok=True)

    resolution = int(sys.argv[1]) if len(sys.argv) > 1 else 101
    logger.info("Writing figure data to %s", os.path.abspath(data_dir))
    try:
        level_set_data(data_dir)
        basin_data(data_dir, resolution)
    except DrZeroError as e:
        logger.error("Error reproducing figure data: %s", e)
        sys.exit(e.exit_code)


if __name__ == "__main__":
    main()
