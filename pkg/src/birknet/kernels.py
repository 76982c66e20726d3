"""Backend selection for the numerical kernels.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
pure-Python mirror ``_pykernels`` is used.  Setting ``BIRKNET_PURE_PYTHON=1``
forces the fallback.
"""

import os

import numpy as np

from birknet import _pykernels
from birknet._pykernels import BLOWUP, DOMAIN, NONFINITE, OK, QUADFAIL, SINGULAR

try:
    from birknet import _ckernels
except ImportError:  # extension not built
    _ckernels = None

STATUS_TEXT = {
    OK: "ok",
    DOMAIN: "domain error",
    NONFINITE: "non-finite value",
    QUADFAIL: "quadrature did not converge",
    SINGULAR: "singular mass matrix",
    BLOWUP: "state blow-up",
}

__all__ = [
    "BACKEND",
    "available_backends",
    "get_backend",
    "STATUS_TEXT",
    "OK",
    "DOMAIN",
    "NONFINITE",
    "QUADFAIL",
    "SINGULAR",
    "BLOWUP",
]


def available_backends() -> dict:
    out = {"python": _pykernels}
    if _ckernels is not None:
        out["compiled"] = _ckernels
    return out


def get_backend(name=None):
    """Return the kernel module named ``name`` (default: the selected one)."""
    if name is None:
        return _impl
    try:
        return available_backends()[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available") from None


if _ckernels is not None and os.environ.get("BIRKNET_PURE_PYTHON") != "1":
    BACKEND = "compiled"
    _impl = _ckernels
else:
    BACKEND = "python"
    _impl = _pykernels


def eval_program(prog, x, backend=None):
    """(status, f, f') of a compiled expression at ``x``."""
    impl = get_backend(backend)
    return impl.eval_program(prog.code, prog.consts, 0, len(prog.code), float(x))


def quad_program(prog, a, b, weighted=False, tol=1e-12, maxdepth=40, backend=None):
    impl = get_backend(backend)
    return impl.quad_program(
        prog.code, prog.consts, 0, len(prog.code), float(a), float(b), int(weighted), tol, maxdepth
    )


def pack_programs(programs):
    """Concatenate programs into (code, starts, consts) with shifted const slots."""
    code_parts = []
    const_parts = []
    starts = [0]
    n_consts = 0
    for prog in programs:
        code = prog.code.copy()
        is_const = code[0::2] == 0
        args = code[1::2]
        args[is_const] += n_consts
        code[1::2] = args
        code_parts.append(code)
        const_parts.append(prog.consts)
        n_consts += len(prog.consts)
        starts.append(starts[-1] + len(code))
    code = np.ascontiguousarray(np.concatenate(code_parts), dtype=np.int32)
    consts = np.ascontiguousarray(
        np.concatenate(const_parts) if const_parts else np.zeros(0), dtype=np.float64
    )
    return code, np.asarray(starts, dtype=np.int32), consts
