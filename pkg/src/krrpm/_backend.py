"""Select the compiled core or the numpy fallback at import time.

Set ``KRRPM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from krrpm import _fallback

if os.environ.get("KRRPM_PURE_PYTHON") == "1":
    impl = _fallback
else:
    try:
        from krrpm import _core as impl
    except ImportError:
        impl = _fallback

BACKEND = "compiled" if impl is not _fallback else "python"
