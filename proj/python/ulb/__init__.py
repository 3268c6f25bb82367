# SPDX-License-Identifier: Apache-2.0
"""Ultra-low-bit (1/2-bit) weight GEMV kernels, packed layouts and roofline models."""

try:
    from ._ulb import *  # noqa: F401,F403
    from ._ulb import __doc__ as _core_doc  # noqa: F401
except ImportError:  # in-tree builds put _ulb next to this package
    from _ulb import *  # noqa: F401,F403

__version__ = "0.1.0"
