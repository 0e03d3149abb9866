"""Regenerate the 250-particle belief fixture and its frozen select output.

    python3 scripts/make_fixture.py
"""

import io
from pathlib import Path

import numpy as np

from partimax import cli
from partimax import config as cfgmod

DATA = Path(__file__).resolve().parents[1] / "tests" / "data"


def fixture_particles(seed=250, m=250) -> np.ndarray:
    rng = np.random.default_rng(seed)
    centers = np.array([[1200.0, 900.0], [3900.0, 2600.0], [2500.0, 3300.0]])
    which = rng.choice(3, size=m, p=[0.5, 0.3, 0.2])
    p = np.zeros((m, 4))
    p[:, :2] = centers[which] + rng.normal(0, 120, (m, 2))
    p[:, 2:] = rng.uniform(-10, 10, (m, 2))
    return np.round(p, 3)


def main():
    DATA.mkdir(parents=True, exist_ok=True)
    path = DATA / "particles_250.csv"
    np.savetxt(path, fixture_particles(), delimiter=",", header="x,y,vx,vy", comments="", fmt="%.3f")
    cfg = cfgmod.RunConfig().replace("run", mode="select", belief=str(path))
    buf = io.StringIO()
    cli.cmd_select(cfg, out=buf)
    (DATA / "particles_250.expected").write_text(buf.getvalue())
    print(buf.getvalue(), end="")


if __name__ == "__main__":
    main()
