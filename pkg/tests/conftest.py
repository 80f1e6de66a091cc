"""
Fixtures partilhadas pelos testes do occreg.
"""
import numpy as np
import pytest

from occreg.geometry.point_cloud import SemanticPointCloud
from occreg.geometry.voxel_grid import VoxelGridSpec
from occreg.utils.taxonomy import default_taxonomy


def plane_points(x_range, y_range, z, spacing):
    """Grelha regular de pontos num plano horizontal."""
    xs = np.arange(x_range[0], x_range[1] + 1e-9, spacing)
    ys = np.arange(y_range[0], y_range[1] + 1e-9, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing='ij')
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])


def room_points(spacing=0.25):
    """Chão, três paredes e uma caixa: estrutura que fixa os 6 graus de liberdade."""
    floor = plane_points((-5.0, 5.0), (-5.0, 5.0), 0.0, spacing)
    s = np.arange(-5.0, 5.0 + 1e-9, spacing)
    h = np.arange(spacing, 3.0 + 1e-9, spacing)
    gs, gh = np.meshgrid(s, h, indexing='ij')
    gs, gh = gs.ravel(), gh.ravel()
    wall_x = np.column_stack([np.full(gs.size, 5.0), gs, gh])
    wall_nx = np.column_stack([np.full(gs.size, -5.0), gs, gh])
    wall_y = np.column_stack([gs, np.full(gs.size, 5.0), gh])
    b = np.arange(0.0, 1.0 + 1e-9, spacing)
    bx, by = np.meshgrid(b, b, indexing='ij')
    box_top = np.column_stack([bx.ravel() - 1.0, by.ravel() - 2.0, np.full(bx.size, 1.0)])
    box_side = np.column_stack([np.full(bx.size, -1.0), bx.ravel() - 2.0, by.ravel()])
    return np.concatenate([floor, wall_x, wall_nx, wall_y, box_top, box_side])


@pytest.fixture(scope='session')
def taxonomy():
    return default_taxonomy()


@pytest.fixture
def compact_spec():
    """Janela de 40 x 40 m, com a mesma altura da grelha por omissão."""
    return VoxelGridSpec(0.4, (-20.0, -20.0, -1.0), (100, 100, 16))


@pytest.fixture
def room_cloud():
    points = room_points()
    labels = np.full(len(points), 15, dtype=np.uint8)
    labels[np.isclose(points[:, 2], 0.0)] = 11
    return SemanticPointCloud(points, labels, 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
