"""Polynomial kernel with a compiled core and a pure-Python fallback.

The compiled extension is used when it is importable; set the environment
variable ``JETVAR_PURE_KERNEL=1`` to force the pure backend (used by the
benchmark and by the backend-parity tests). ``BACKEND`` reports which one
is active: ``"c"`` or ``"python"``.
"""

import os

if os.environ.get("JETVAR_PURE_KERNEL"):
    from . import pure as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pure as _impl

BACKEND = _impl.BACKEND
ONE_MONO = _impl.ONE_MONO
rat = _impl.rat
rat_add = _impl.rat_add
rat_mul = _impl.rat_mul
poly_const = _impl.poly_const
poly_atom = _impl.poly_atom
poly_is_const = _impl.poly_is_const
mono_mul = _impl.mono_mul
mono_degree = _impl.mono_degree
poly_add = _impl.poly_add
poly_neg = _impl.poly_neg
poly_sub = _impl.poly_sub
poly_scale = _impl.poly_scale
poly_mul = _impl.poly_mul
poly_pow = _impl.poly_pow
poly_diff = _impl.poly_diff
poly_support = _impl.poly_support
poly_radial_scale = _impl.poly_radial_scale
