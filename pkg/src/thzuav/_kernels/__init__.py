"""Numeric core with backend selection.

Two interchangeable implementations of the hot kernels live here:

* ``_core``  -- Cython extension (built at install time when a compiler is
  available),
* ``_py``    -- vectorized numpy fallback.

The compiled backend is preferred when importable.  Set the environment
variable ``THZUAV_KERNELS=python`` to force the fallback (useful for the
benchmark and for debugging), or ``THZUAV_KERNELS=compiled`` to fail loudly
if the extension is missing.

Both backends expose the same two functions:

``phase_sums(base, phases, wavenumbers)``
    Cascaded per-element phase sum  S_i = sum_n exp(j*(phases[n] - k_i*base[n]))
    for every sub-band wavenumber k_i.

``candidate_scores(...)``
    Worst-user linearized slot throughput for a batch of candidate UAV
    positions (the inner objective of the per-slot trajectory search).
"""

import os

_choice = os.environ.get("THZUAV_KERNELS", "auto").lower()

if _choice == "python":
    from . import _py as _impl
elif _choice == "compiled":
    from . import _core as _impl  # ImportError here is intentional feedback
else:
    try:
        from . import _core as _impl
    except ImportError:
        from . import _py as _impl

BACKEND = "compiled" if _impl.__name__.endswith("_core") else "python"

phase_sums = _impl.phase_sums
candidate_scores = _impl.candidate_scores

__all__ = ["BACKEND", "phase_sums", "candidate_scores"]
