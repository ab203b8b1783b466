import numpy as np
import pytest

from chemoplast import mesh as mesh_mod
from chemoplast.constitutive import MaterialParams


def build_strip_mesh(nx, L=1.0, height=0.01):
    """Structured thin strip (nx x 1 cells, split into triangles) tagged like
    a plate; used as a 1-D diffusion surrogate."""
    xs = np.linspace(0.0, L, nx + 1)
    ys = np.array([0.0, height])
    nodes = np.array([[x, y] for y in ys for x in xs])
    tris, edges, tags = [], [], []

    def nid(i, j):
        return j * (nx + 1) + i

    for i in range(nx):
        tris.append([nid(i, 0), nid(i + 1, 0), nid(i + 1, 1)])
        tris.append([nid(i, 0), nid(i + 1, 1), nid(i, 1)])
        edges.append([nid(i, 0), nid(i + 1, 0)]); tags.append("bottom")
        edges.append([nid(i, 1), nid(i + 1, 1)]); tags.append("top")
    edges.append([nid(0, 0), nid(0, 1)]); tags.append("left")
    edges.append([nid(nx, 0), nid(nx, 1)]); tags.append("right")
    return mesh_mod.Mesh(np.asarray(nodes, float), np.asarray(tris, dtype=np.int64),
                         np.asarray(edges, dtype=np.int64), np.asarray(tags, dtype=str),
                         {"kind": "strip", "L": L, "height": height})


def build_two_element_square():
    """Unit square split along the diagonal; the smallest mesh with an
    interior edge."""
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    edges = np.array([[0, 1], [1, 2], [2, 3], [3, 0]], dtype=np.int64)
    tags = np.array(["bottom", "right", "top", "left"])
    return mesh_mod.Mesh(nodes, tris, edges, tags, {"kind": "square"})


def uniform_grid_mesh(n, L=1.0):
    """n x n uniform criss-cross grid (all diagonals parallel); the
    'structured patch' used by recovery exactness checks."""
    xs = np.linspace(0.0, L, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    tris, edges, tags = [], [], []

    def nid(i, j):
        return i * (n + 1) + j

    for i in range(n):
        for j in range(n):
            tris.append([nid(i, j), nid(i + 1, j), nid(i + 1, j + 1)])
            tris.append([nid(i, j), nid(i + 1, j + 1), nid(i, j + 1)])
    for k in range(n):
        edges.append([nid(k, 0), nid(k + 1, 0)]); tags.append("bottom")
        edges.append([nid(k, n), nid(k + 1, n)]); tags.append("top")
        edges.append([nid(0, k), nid(0, k + 1)]); tags.append("left")
        edges.append([nid(n, k), nid(n, k + 1)]); tags.append("right")
    return mesh_mod.Mesh(nodes, np.asarray(tris, dtype=np.int64),
                         np.asarray(edges, dtype=np.int64), np.asarray(tags, dtype=str),
                         {"kind": "grid", "L": L})


@pytest.fixture
def steel():
    return MaterialParams(E=210e9, nu=0.3, D=1.27e-8, Omega=1.96e-6, T=300.0)


@pytest.fixture
def steel_plastic():
    return MaterialParams(E=210e9, nu=0.3, D=1.27e-8, Omega=1.96e-6, T=300.0,
                          sigma_y0=400e6, hardening_kind="isotropic", H=2.1e9)


@pytest.fixture
def steel_kinematic():
    return MaterialParams(E=210e9, nu=0.3, D=1.27e-8, Omega=1.96e-6, T=300.0,
                          sigma_y0=400e6, hardening_kind="kinematic", h=2.1e9)


@pytest.fixture
def rng():
    return np.random.default_rng(20240814)
