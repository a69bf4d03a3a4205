"""Compiled inner loops for Galerkin assembly and potential evaluation.

All routines take several frequencies at once so that geometry and
quadrature work is shared between them.
"""
from __future__ import annotations

import numpy as np
from numba import njit

FOUR_PI = 4.0 * np.pi


@njit(cache=True)
def _classify(ti, tj, pi, pj):
    """Count shared vertices and write local orderings putting them first."""
    nshared = 0
    mi = 0
    mj = 0
    for a in range(3):
        for b in range(3):
            if ti[a] == tj[b]:
                pi[nshared] = a
                pj[nshared] = b
                nshared += 1
                mi |= 1 << a
                mj |= 1 << b
    ki = nshared
    kj = nshared
    for a in range(3):
        if not (mi >> a) & 1:
            pi[ki] = a
            ki += 1
        if not (mj >> a) & 1:
            pj[kj] = a
            kj += 1
    return nshared


@njit(cache=True)
def _basis(r1, r2, out):
    out[0] = 1.0 - r1
    out[1] = r1 - r2
    out[2] = r2


@njit(cache=True)
def _accumulate(svals, xs, ys, bxs, bys, wts, nj, ni, with_mass, pv, kx, ky, wm):
    """Add one panel pair's quadrature sums; xs, ys are physical points."""
    ns = svals.shape[0]
    for q in range(wts.shape[0]):
        r2 = 0.0
        dni = 0.0
        dnj = 0.0
        for c in range(3):
            dc = xs[q, c] - ys[q, c]
            r2 += dc * dc
            dnj += dc * nj[c]
            dni -= dc * ni[c]
        r = np.sqrt(r2)
        wq = wts[q] / (FOUR_PI * r)
        for si in range(ns):
            s = svals[si]
            phi = wq * np.exp(-s * r)
            pv[si] += phi
            g = phi * (1.0 + s * r) / r2
            gy = g * dnj
            gx = g * dni
            for a in range(3):
                ky[si, a] += gy * bys[q, a]
                kx[si, a] += gx * bxs[q, a]
            if with_mass:
                for a in range(3):
                    pa = phi * bxs[q, a]
                    for b in range(3):
                        wm[si, a, b] += pa * bys[q, b]


@njit(cache=True)
def assemble_pairs(vertices, triangles, normals, areas, centroids, diams, curls,
                   svals, reg_pts, reg_basis, reg_w, sing_pts, sing_w, sing_off, V, K, W):
    """Accumulate V (P0 x P0), K (P0 x P1) and W (P1 x P1) for every s in svals.

    Regular pairs use per-panel points ``reg_pts[k]`` (k = 0: 3-point,
    k = 1: 6-point rule) with basis values ``reg_basis[k]`` and weights
    ``reg_w[k]``; singular rules 0 (vertex), 1 (edge), 2 (coincident) live
    in ``sing_pts`` between the offsets ``sing_off``.
    """
    nt = triangles.shape[0]
    ns = svals.shape[0]
    pi = np.empty(3, np.int64)
    pj = np.empty(3, np.int64)
    pv = np.empty(ns, np.complex128)
    kx = np.empty((ns, 3), np.complex128)
    ky = np.empty((ns, 3), np.complex128)
    wm = np.empty((ns, 3, 3), np.complex128)
    nmax = 0
    for k in range(3):
        nmax = max(nmax, sing_off[k + 1] - sing_off[k])
    nmax = max(nmax, reg_w[1].shape[0] ** 2)
    xs = np.empty((nmax, 3))
    ys = np.empty((nmax, 3))
    bxs = np.empty((nmax, 3))
    bys = np.empty((nmax, 3))
    wts = np.empty(nmax)
    for i in range(nt):
        for j in range(i, nt):
            if i == j:
                nshared = 3
                for a in range(3):
                    pi[a] = a
                    pj[a] = a
            else:
                nshared = _classify(triangles[i], triangles[j], pi, pj)
            jac = 4.0 * areas[i] * areas[j]
            if nshared == 0:
                for a in range(3):
                    pi[a] = a
                    pj[a] = a
                d2 = 0.0
                for c in range(3):
                    d2 += (centroids[i, c] - centroids[j, c]) ** 2
                dmax = max(diams[i], diams[j])
                k = 1 if d2 < 4.0 * dmax * dmax else 0
                nq1 = reg_w[k].shape[0]
                n = 0
                for a in range(nq1):
                    for b in range(nq1):
                        for c in range(3):
                            xs[n, c] = reg_pts[k][i, a, c]
                            ys[n, c] = reg_pts[k][j, b, c]
                            bxs[n, c] = reg_basis[k][a, c]
                            bys[n, c] = reg_basis[k][b, c]
                        wts[n] = reg_w[k][a] * reg_w[k][b] * jac
                        n += 1
            else:
                rule = nshared - 1
                xi1 = vertices[triangles[i, pi[0]]]
                xi2 = vertices[triangles[i, pi[1]]]
                xi3 = vertices[triangles[i, pi[2]]]
                yj1 = vertices[triangles[j, pj[0]]]
                yj2 = vertices[triangles[j, pj[1]]]
                yj3 = vertices[triangles[j, pj[2]]]
                n = 0
                for q in range(sing_off[rule], sing_off[rule + 1]):
                    _basis(sing_pts[q, 0], sing_pts[q, 1], bxs[n])
                    _basis(sing_pts[q, 2], sing_pts[q, 3], bys[n])
                    for c in range(3):
                        xs[n, c] = bxs[n, 0] * xi1[c] + bxs[n, 1] * xi2[c] + bxs[n, 2] * xi3[c]
                        ys[n, c] = bys[n, 0] * yj1[c] + bys[n, 1] * yj2[c] + bys[n, 2] * yj3[c]
                    wts[n] = sing_w[q] * jac
                    n += 1
            ni = normals[i]
            nj = normals[j]
            nn = ni[0] * nj[0] + ni[1] * nj[1] + ni[2] * nj[2]
            with_mass = abs(nn) > 1e-14
            pv[:] = 0.0
            kx[:, :] = 0.0
            ky[:, :] = 0.0
            wm[:, :, :] = 0.0
            _accumulate(svals, xs[:n], ys[:n], bxs[:n], bys[:n], wts[:n], nj, ni, with_mass,
                        pv, kx, ky, wm)
            ci = curls[i]
            cj = curls[j]
            for si in range(ns):
                s2 = svals[si] * svals[si]
                V[si, i, j] += pv[si]
                if i != j:
                    V[si, j, i] += pv[si]
                for a in range(3):
                    K[si, i, triangles[j, pj[a]]] += ky[si, a]
                    if i != j:
                        K[si, j, triangles[i, pi[a]]] += kx[si, a]
                for a in range(3):
                    va = triangles[i, pi[a]]
                    for b in range(3):
                        vb = triangles[j, pj[b]]
                        cc = (ci[pi[a], 0] * cj[pj[b], 0] + ci[pi[a], 1] * cj[pj[b], 1]
                              + ci[pi[a], 2] * cj[pj[b], 2])
                        val = cc * pv[si] + s2 * nn * wm[si, a, b]
                        W[si, va, vb] += val
                        if i != j:
                            W[si, vb, va] += val


@njit(cache=True)
def potentials_at(points, vertices, triangles, normals, areas, svals, rule_pts, rule_w,
                  phi, lam, out):
    """out[si, p] = -(S(s) lam)(x_p) + (D(s) phi)(x_p) for P0 lam and P1 phi.

    phi and lam carry one density per frequency: shapes (ns, nv) and (ns, nt).
    """
    npnt = points.shape[0]
    nt = triangles.shape[0]
    ns = svals.shape[0]
    nq = rule_w.shape[0]
    y = np.empty(3)
    b = np.empty(3)
    for p in range(npnt):
        for t in range(nt):
            v1 = vertices[triangles[t, 0]]
            v2 = vertices[triangles[t, 1]]
            v3 = vertices[triangles[t, 2]]
            n = normals[t]
            jac = 2.0 * areas[t]
            for q in range(nq):
                _basis(rule_pts[q, 0], rule_pts[q, 1], b)
                r2 = 0.0
                dn = 0.0
                for c in range(3):
                    y[c] = b[0] * v1[c] + b[1] * v2[c] + b[2] * v3[c]
                    dc = points[p, c] - y[c]
                    r2 += dc * dc
                    dn += dc * n[c]
                r = np.sqrt(r2)
                wq = rule_w[q] * jac
                for si in range(ns):
                    s = svals[si]
                    e = wq * np.exp(-s * r) / (FOUR_PI * r)
                    dphi = e * (1.0 + s * r) * dn / r2
                    trace = (b[0] * phi[si, triangles[t, 0]] + b[1] * phi[si, triangles[t, 1]]
                             + b[2] * phi[si, triangles[t, 2]])
                    out[si, p] += dphi * trace - e * lam[si, t]
