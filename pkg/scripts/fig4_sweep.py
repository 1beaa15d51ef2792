"""Spin-wave (atomic) criterion surface over (r, eta_M) at optimal gain.

    python scripts/fig4_sweep.py --out results/fig4.csv
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from fig2_sweep import main  # noqa: E402

from trimem.network import Stage  # noqa: E402

if __name__ == "__main__":
    main(Stage.ATOMIC, "results/fig4.csv")
