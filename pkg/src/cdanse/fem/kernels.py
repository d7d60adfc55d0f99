"""Backend selection for the convective element kernels.

The compiled extension is used when it was built and importable; setting
``CDANSE_PURE_PYTHON=1`` forces the numpy implementation.
"""

import os

from . import _kernels_py

BACKEND = "python"
convection_local = _kernels_py.convection_local
newton_local = _kernels_py.newton_local

if os.environ.get("CDANSE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        convection_local = _ckernels.convection_local
        newton_local = _ckernels.newton_local
