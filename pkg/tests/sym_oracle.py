"""Brute-force tensor calculus for n = 4 in coordinates (r, t, th, ph)."""
from __future__ import annotations

import sympy as sp

r, t, th, ph = sp.symbols("r t th ph", real=True)
X = (r, t, th, ph)
N = 4


def metric_matrix(rr, rt, tt, ss):
    return sp.Matrix([[rr, rt, 0, 0], [rt, tt, 0, 0], [0, 0, ss, 0],
                      [0, 0, 0, ss * sp.sin(th) ** 2]])


def inverse(g):
    """Inverse of the block-diagonal metric without generic elimination."""
    det = g[0, 0] * g[1, 1] - g[0, 1] ** 2
    gi = sp.zeros(N, N)
    gi[0, 0], gi[1, 1] = g[1, 1] / det, g[0, 0] / det
    gi[0, 1] = gi[1, 0] = -g[0, 1] / det
    gi[2, 2], gi[3, 3] = 1 / g[2, 2], 1 / g[3, 3]
    return gi


def christoffel(g):
    gi = inverse(g)
    return [[[(sum(gi[a, e] * (sp.diff(g[e, b], X[c]) + sp.diff(g[e, c], X[b])
                                          - sp.diff(g[b, c], X[e])) for e in range(N)) / 2)
              for c in range(N)] for b in range(N)] for a in range(N)], gi


def nabla2(T, G):
    """nabla_c T_ab -> D[c][a][b]."""
    return [[[sp.diff(T[a, b], X[c]) - sum(G[e][c][a] * T[e, b] + G[e][c][b] * T[a, e]
                                           for e in range(N))
              for b in range(N)] for a in range(N)] for c in range(N)]


def rough_laplacian(g, h):
    G, gi = christoffel(g)
    D = nabla2(h, G)
    out = sp.zeros(N, N)
    for a in range(N):
        for b in range(N):
            acc = 0
            for c in range(N):
                for e in range(N):
                    if gi[c, e] == 0:
                        continue
                    v = sp.diff(D[e][a][b], X[c])
                    for f in range(N):
                        v -= G[f][c][e] * D[f][a][b] + G[f][c][a] * D[e][f][b] + G[f][c][b] * D[e][a][f]
                    acc += gi[c, e] * v
            out[a, b] = -acc
    return out


def ricci(g):
    G, _ = christoffel(g)
    Ric = sp.zeros(N, N)
    for b in range(N):
        for d in range(N):
            v = 0
            for a in range(N):
                v += sp.diff(G[a][d][b], X[a]) - sp.diff(G[a][a][b], X[d])
                for e in range(N):
                    v += G[a][a][e] * G[e][d][b] - G[a][d][e] * G[e][a][b]
            Ric[b, d] = v
    return Ric


def bianchi(gbar, h):
    G, gi = christoffel(gbar)
    D = nabla2(h, G)
    tr = sum(gi[a, b] * h[a, b] for a in range(N) for b in range(N))
    return [-sum(gi[c, e] * D[c][e][a] for c in range(N) for e in range(N)) + sp.diff(tr, X[a]) / 2
            for a in range(N)]


def lie(g, V):
    out = sp.zeros(N, N)
    for a in range(N):
        for b in range(N):
            out[a, b] = sum(V[e] * sp.diff(g[a, b], X[e]) + g[e, b] * sp.diff(V[e], X[a])
                            + g[a, e] * sp.diff(V[e], X[b]) for e in range(N))
    return out


def einstein_operator(gbar, g):
    beta = bianchi(gbar, g)
    gi = inverse(g)
    V = [sum(gi[a, b] * beta[b] for b in range(N)) for a in range(N)]
    return ricci(g) + 3 * g + lie(g, V) / 2
