"""Hot per-element kernels with a compiled core and a numpy fallback.

The compiled extension (``_core``, Cython) is preferred; set
``WEARSIM_PURE_PYTHON=1`` to force the numpy implementation. Both
backends expose the same functions and agree element-wise; see
``tests/test_kernels.py`` and ``benchmarks/bench_kernels.py``.
"""

import os

from . import _fallback

if os.environ.get("WEARSIM_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

NOSPLIT = _fallback.NOSPLIT
PH = _fallback.PH
HD = _fallback.HD

element_strains = _impl.element_strains
split_moduli = _impl.split_moduli
stiffness_values = _impl.stiffness_values
damage_values = _impl.damage_values
elastic_energy_terms = _impl.elastic_energy_terms

__all__ = [
    "BACKEND", "NOSPLIT", "PH", "HD",
    "element_strains", "split_moduli", "stiffness_values",
    "damage_values", "elastic_energy_terms",
]
