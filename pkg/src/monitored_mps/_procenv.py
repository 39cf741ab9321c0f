"""Worker-process environment setup.

Deliberately imports nothing heavy: it runs as a pool initializer before
numpy is loaded in the worker, so the BLAS thread caps below take effect.
One BLAS thread per worker keeps results independent of the worker count
and avoids oversubscription when several trajectories run side by side.
"""

import os

#: Environment variable that caps the worker count; explicit flags win.
WORKERS_ENV = "MONITORED_MPS_MAX_WORKERS"

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def limit_blas_threads() -> None:
    for var in _BLAS_VARS:
        os.environ[var] = "1"
