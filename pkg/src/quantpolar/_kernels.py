"""Kernel backend selection.

The compiled extension is used when it imports cleanly; set
``QUANTPOLAR_PURE=1`` to force the numpy implementation.
"""

import os

from . import _pykernels

BACKEND = "numpy"
sc_decode_batch = _pykernels.sc_decode_batch
genie_leaf_messages = _pykernels.genie_leaf_messages

if not os.environ.get("QUANTPOLAR_PURE"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        sc_decode_batch = _ckernels.sc_decode_batch
        genie_leaf_messages = _ckernels.genie_leaf_messages
