"""Dense-quadrature oracles for the assembled operators and the Stokes solve.

The dense matrices are rebuilt here entry by entry with straightforward loops,
independent of the package's stencil/Fourier code paths.
"""

import numpy as np
import pytest

from tracerinv.fe import _kernels_fallback as fallback
from tracerinv.fe import kernels
from tracerinv.fe.levels import (
    CORNERS,
    LevelOperators,
    LevelSpec,
    _q1_tables,
)
from tracerinv.fe.solver import _SaddleSystem


def dense_scalar_matrices(ops):
    """Mass and stiffness on the fine mesh by per-cell quadrature loops."""
    nv, h = ops.nv, ops.h
    pts, wts, shp, dxi, deta = _q1_tables(3)
    dx, dy = dxi / h, deta / h
    wq = wts * h * h
    nn = nv * nv
    mass = np.zeros((nn, nn))
    stiff = np.zeros((nn, nn))

    def nid(ix, iy):
        return (ix % nv) * nv + (iy % nv)

    for cx in range(nv):
        for cy in range(nv):
            nodes = [nid(cx + a, cy + b) for (a, b) in CORNERS]
            for q in range(len(wq)):
                for i in range(4):
                    for j in range(4):
                        mass[nodes[i], nodes[j]] += wq[q] * shp[q, i] * shp[q, j]
                        stiff[nodes[i], nodes[j]] += wq[q] * (
                            dx[q, i] * dx[q, j] + dy[q, i] * dy[q, j]
                        )
    return mass, stiff


def dense_divergence(ops):
    """(div u, q) coupling with coarse hats evaluated at fine-cell Gauss points."""
    nv, npr, h = ops.nv, ops.npr, ops.h
    H = 1.0 / npr
    pts, wts, shp, dxi, deta = _q1_tables(3)
    dx, dy = dxi / h, deta / h
    wq = wts * h * h

    def coarse_hat(j1, j2, x, y):
        def tent(s, c):
            d = abs(((s - c + 0.5) % 1.0) - 0.5)
            return max(0.0, 1.0 - d / H)

        return tent(x, j1 * H) * tent(y, j2 * H)

    def nid(ix, iy):
        return (ix % nv) * nv + (iy % nv)

    dxm = np.zeros((npr * npr, nv * nv))
    dym = np.zeros((npr * npr, nv * nv))
    for cx in range(nv):
        for cy in range(nv):
            nodes = [nid(cx + a, cy + b) for (a, b) in CORNERS]
            for q in range(len(wq)):
                gx, gy = pts[q]
                xq, yq = (cx + gx) * h, (cy + gy) * h
                for j1 in range(npr):
                    for j2 in range(npr):
                        qv = coarse_hat(j1, j2, xq, yq)
                        if qv == 0.0:
                            continue
                        for j in range(4):
                            dxm[j1 * npr + j2, nodes[j]] += wq[q] * qv * dx[q, j]
                            dym[j1 * npr + j2, nodes[j]] += wq[q] * qv * dy[q, j]
    return dxm, dym


@pytest.fixture(scope="module")
def small_ops():
    return LevelOperators(LevelSpec(level=0, base_resolution=3), viscosity=0.17)


def test_mass_and_stiffness_stencils_match_dense(small_ops, rng):
    mass, stiff = dense_scalar_matrices(small_ops)
    nv = small_ops.nv
    u = rng.standard_normal((nv, nv))
    out = np.empty_like(u)
    kernels.stencil9_const_apply(small_ops.mass9, u, out)
    assert np.allclose(out.ravel(), mass @ u.ravel(), atol=1e-13)
    kernels.stencil9_const_apply(small_ops.stiff9, u, out)
    assert np.allclose(out.ravel(), stiff @ u.ravel(), atol=1e-12)


def test_stiffness_annihilates_constants(small_ops):
    nv = small_ops.nv
    u = np.stack([np.ones((nv, nv)), np.zeros((nv, nv))])
    out = small_ops.stiffness_apply(u)
    assert np.abs(out).max() < 1e-14


def test_divergence_and_gradient_match_dense(small_ops, rng):
    dxm, dym = dense_divergence(small_ops)
    nv, npr = small_ops.nv, small_ops.npr
    u = rng.standard_normal((2, nv, nv))
    dv = small_ops.divergence(u)
    dense = (dxm @ u[0].ravel() + dym @ u[1].ravel()).reshape(npr, npr)
    assert np.allclose(dv, dense, atol=1e-13)
    p = rng.standard_normal((npr, npr))
    gx, gy = small_ops.gradient(p)
    assert np.allclose(gx.ravel(), dxm.T @ p.ravel(), atol=1e-13)
    assert np.allclose(gy.ravel(), dym.T @ p.ravel(), atol=1e-13)


def test_divergence_of_shear_interpolant_is_zero():
    # u = (sin(2 pi y), 0) has zero divergence; the tensor stencil reproduces
    # it exactly because the x-difference of an x-constant field vanishes.
    ops = LevelOperators(LevelSpec(level=2), viscosity=0.1)
    x, y = np.meshgrid(np.arange(ops.nv) / ops.nv, np.arange(ops.nv) / ops.nv, indexing="ij")
    u = np.stack([np.sin(2 * np.pi * y), np.zeros_like(y)])
    assert np.abs(ops.divergence(u)).max() < 1e-14


def test_divergence_of_skew_wave_decays_second_order():
    # rotated divergence-free wave with incommensurate wavenumbers: the
    # discrete divergence is consistency error only, O(h^2) under refinement
    errs = []
    for lvl in (0, 1, 2, 3):
        ops = LevelOperators(LevelSpec(level=lvl), viscosity=0.1)
        s = np.arange(ops.nv) / ops.nv
        x, y = np.meshgrid(s, s, indexing="ij")
        phase = 2 * np.pi * (x + 2 * y)
        u = np.stack([-2.0 * np.sin(phase), np.sin(phase)])
        errs.append(np.abs(ops.divergence(u)).max())
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    assert all(1.7 < r < 2.3 for r in rates), (errs, rates)


def test_convection_stencil_is_skew_symmetric(rng):
    ops = LevelOperators(LevelSpec(level=1), viscosity=0.1)
    nv = ops.nv
    w = rng.standard_normal((2, nv, nv))
    conv9 = ops.assemble_convection(w)
    u = rng.standard_normal((nv, nv))
    v = rng.standard_normal((nv, nv))
    zero = np.zeros(9)
    cu = np.empty_like(u)
    cv = np.empty_like(v)
    kernels.stencil9_apply(conv9, zero, u, cu)
    kernels.stencil9_apply(conv9, zero, v, cv)
    # (N u, v) + (N v, u) = 0 for the skew form, exactly integrated
    assert abs(np.sum(cu * v) + np.sum(cv * u)) < 1e-12 * np.abs(cu).max()


def test_compiled_and_fallback_kernels_agree(rng):
    ops = LevelOperators(LevelSpec(level=1), viscosity=0.2)
    nv, npr = ops.nv, ops.npr
    w = rng.standard_normal((2, nv, nv))
    u = rng.standard_normal((nv, nv))
    p = rng.standard_normal((npr, npr))
    conv_a = ops.assemble_convection(w)
    conv_b = np.empty_like(conv_a)
    fallback.convection_assemble(ops.conv_tensor, w[0], w[1], conv_b)
    assert np.allclose(conv_a, conv_b, atol=1e-14)

    out_a = np.empty_like(u)
    out_b = np.empty_like(u)
    kernels.stencil9_apply(conv_a, ops.const9, u, out_a)
    fallback.stencil9_apply(conv_a, ops.const9, u, out_b)
    assert np.allclose(out_a, out_b, atol=1e-13)

    ra = np.zeros((npr, npr))
    rb = np.zeros((npr, npr))
    kernels.twoscale_restrict(ops.dx_phys, u, ra)
    fallback.twoscale_restrict(ops.dx_phys, u, rb)
    assert np.allclose(ra, rb, atol=1e-14)

    ga = np.zeros((nv, nv))
    gb = np.zeros((nv, nv))
    kernels.twoscale_prolong(ops.dx_phys, p, ga)
    fallback.twoscale_prolong(ops.dx_phys, p, gb)
    assert np.allclose(ga, gb, atol=1e-14)


@pytest.mark.parametrize("npr0,nuval,lvl", [(2, 0.1, 0), (3, 0.45, 0), (2, 0.2, 1)])
def test_stokes_solve_matches_dense(npr0, nuval, lvl, rng):
    spec = LevelSpec(level=lvl, base_resolution=npr0)
    ops = LevelOperators(spec, viscosity=nuval)
    nv, npr = ops.nv, ops.npr
    nn, pp = 2 * nv * nv, npr * npr
    system = _SaddleSystem(ops, np.zeros((9, nv, nv)))
    n_tot = nn + pp
    mat = np.zeros((n_tot, n_tot))
    e = np.zeros(n_tot)
    for k in range(n_tot):
        e[:] = 0.0
        e[k] = 1.0
        mat[:, k] = system.apply(e)
    bu = rng.standard_normal((2, nv, nv))
    bp = rng.standard_normal((npr, npr))
    bp -= bp.mean()  # compatibility: div residuals always have zero mean
    b = np.concatenate([bu.ravel(), bp.ravel()])
    x, *_ = np.linalg.lstsq(mat, b, rcond=None)
    ud = x[:nn].reshape(2, nv, nv)
    pd = x[nn:].reshape(npr, npr)
    pd -= pd.mean()
    uf, pf = ops.stokes_solve(bu, bp)
    assert np.allclose(uf, ud, atol=1e-10)
    assert np.allclose(pf, pd, atol=1e-10)
    assert abs(pf.mean()) < 1e-13
    assert np.abs(ops.divergence(uf) - bp).max() < 1e-12


def test_stokes_solution_divergence_free(rng):
    ops = LevelOperators(LevelSpec(level=2), viscosity=0.1)
    bu = rng.standard_normal((2, ops.nv, ops.nv))
    u, p = ops.stokes_solve(bu)
    assert np.abs(ops.divergence(u)).max() < 1e-12
    assert abs(p.mean()) < 1e-12


def test_level_spec_halving():
    for lvl in range(4):
        s0 = LevelSpec(level=lvl)
        s1 = LevelSpec(level=lvl + 1)
        assert s0.mesh_size == 2 * s1.mesh_size
        assert s0.time_step == 2 * s1.time_step
        assert s1.n_steps == 2 * s0.n_steps
        assert s1.velocity_cells == 2 * s1.pressure_cells


def test_level_spec_rejects_bad_input():
    with pytest.raises(ValueError):
        LevelSpec(level=-1)
    with pytest.raises(ValueError):
        LevelSpec(level=0, base_resolution=1)
