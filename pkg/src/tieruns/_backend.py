"""Select the trial kernel: compiled extension if importable, else numpy.

Set ``TIERUNS_PURE_PYTHON=1`` to force the numpy implementation.
"""

import os

from . import _kernel_py

try:
    if os.environ.get("TIERUNS_PURE_PYTHON"):
        raise ImportError("pure-Python kernel requested")
    from . import _kernel as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _kernel_py.simulate_histogram}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.simulate_histogram

BACKEND = "compiled" if _compiled is not None else "python"
simulate_histogram = BACKENDS[BACKEND]
