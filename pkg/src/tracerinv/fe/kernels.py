"""Kernel backend selection: compiled extension if built, numpy fallback otherwise."""

try:
    from . import _kernels as _impl

    HAVE_COMPILED = True
except ImportError:  # extension not built; keep the package importable
    from . import _kernels_fallback as _impl

    HAVE_COMPILED = False

stencil9_const_apply = _impl.stencil9_const_apply
stencil9_apply = _impl.stencil9_apply
convection_assemble = _impl.convection_assemble
twoscale_restrict = _impl.twoscale_restrict
twoscale_prolong = _impl.twoscale_prolong


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"
