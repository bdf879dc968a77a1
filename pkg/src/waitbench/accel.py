"""Kernel backend selection.

The hot inner loops (pairwise distances, tree split scans, coordinate
descent sweeps, chain generation) exist twice: numba @njit loops in
``_kernels_numba`` and vectorized numpy twins in ``_kernels_numpy``.
The numba path is used when numba imports cleanly; set
WAITBENCH_DISABLE_NUMBA=1 to force the numpy path. Both paths obey the
same tie-breaking contracts, so results differ only by float rounding.

``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

import os

_flag = os.environ.get("WAITBENCH_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _flag not in ("", "0", "false", "no")

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by WAITBENCH_DISABLE_NUMBA")
    from . import _kernels_numba as _impl

    BACKEND = "numba"
except ImportError:
    from . import _kernels_numpy as _impl

    BACKEND = "numpy"

pairwise_sq_dist = _impl.pairwise_sq_dist
best_split_gini = _impl.best_split_gini
best_split_grad = _impl.best_split_grad
markov_fill = _impl.markov_fill
cd_solve = _impl.cd_solve
