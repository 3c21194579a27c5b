"""Reference-element tables: quadrature rules and P2/P1 shape functions.

Reference triangle has vertices (0,0), (1,0), (0,1).  Local P2 node order:
three vertices, then midpoints of edges (1,2), (2,0), (0,1).  Quadrature
weights sum to the reference area 1/2, so physical integrals scale by
|det J| only.
"""

import numpy as np

# Dunavant rules; barycentric abscissae, weights normalized to unit sum.
_DUNAVANT_4 = [
    (0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011),
    (0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322),
]


def _dunavant_6():
    rows = []
    for a, w in (
        (0.063089014491502, 0.050844906370207),
        (0.249286745170910, 0.116786275726379),
    ):
        b = 1.0 - 2.0 * a
        rows += [(b, a, a, w), (a, b, a, w), (a, a, b, w)]
    a, b, w = 0.310352451033785, 0.053145049844816, 0.082851075618374
    c = 1.0 - a - b
    for l1, l2, l3 in ((c, a, b), (c, b, a), (a, c, b), (b, c, a), (a, b, c), (b, a, c)):
        rows.append((l1, l2, l3, w))
    return rows


def _to_rule(rows):
    arr = np.array(rows)
    pts = arr[:, 1:3]  # (x, y) = (L2, L3)
    wts = 0.5 * arr[:, 3]
    return pts, wts


TRI_POINTS_4, TRI_WEIGHTS_4 = _to_rule(_DUNAVANT_4)
TRI_POINTS_6, TRI_WEIGHTS_6 = _to_rule(_dunavant_6())

# 3-point Gauss-Legendre on [0, 1]; exact to degree 5
_g = np.sqrt(0.15)
EDGE_POINTS_3 = np.array([0.5 - _g, 0.5, 0.5 + _g])
EDGE_WEIGHTS_3 = np.array([5.0, 8.0, 5.0]) / 18.0


def p2_shape(points):
    """P2 values at reference points: (nq, 6)."""
    x, y = points[:, 0], points[:, 1]
    l1 = 1.0 - x - y
    return np.column_stack(
        [
            l1 * (2 * l1 - 1),
            x * (2 * x - 1),
            y * (2 * y - 1),
            4 * x * y,
            4 * y * l1,
            4 * l1 * x,
        ]
    )


def p2_grad(points):
    """P2 reference gradients: (nq, 6, 2)."""
    x, y = points[:, 0], points[:, 1]
    l1 = 1.0 - x - y
    nq = len(points)
    g = np.zeros((nq, 6, 2))
    g[:, 0, 0] = -(4 * l1 - 1)
    g[:, 0, 1] = -(4 * l1 - 1)
    g[:, 1, 0] = 4 * x - 1
    g[:, 2, 1] = 4 * y - 1
    g[:, 3, 0] = 4 * y
    g[:, 3, 1] = 4 * x
    g[:, 4, 0] = -4 * y
    g[:, 4, 1] = 4 * (l1 - y)
    g[:, 5, 0] = 4 * (l1 - x)
    g[:, 5, 1] = -4 * x
    return g


def p1_shape(points):
    """P1 values at reference points: (nq, 3)."""
    x, y = points[:, 0], points[:, 1]
    return np.column_stack([1.0 - x - y, x, y])


def p2_edge_shape(s):
    """Quadratic trace on an edge, parametrized by s in [0,1].

    Node order: endpoint at s=0, endpoint at s=1, midpoint.
    """
    s = np.asarray(s)
    return np.column_stack(
        [(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)]
    )
