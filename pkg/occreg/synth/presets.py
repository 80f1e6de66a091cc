"""
Cenas sintéticas pré-definidas e respetivas trajetórias do ego.

- urban-block: rua estática com edifícios, barreiras, árvores e cones
- dynamic-traffic: urban-block com três atores em movimento (um autocarro)
- slip-road: estrada longa e plana com faixas de rótulos e sinais esparsos
- parked-bus: rua sem textura ao longo de x, com autocarros estacionados
  e trânsito em movimento
"""
from typing import Callable, Dict, List

import numpy as np

from ..geometry.pose import Pose
from ..utils.errors import PresetError
from .world import Primitive, WorldModel

# Rótulos Occ3D-nuScenes usados nas cenas
BARRIER, BUS, CAR, TRAFFIC_CONE, TRUCK = 1, 3, 4, 8, 10
DRIVEABLE, OTHER_FLAT, SIDEWALK, TERRAIN, MANMADE, VEGETATION = 11, 12, 13, 14, 15, 16

# A disposição estática é fixa; a semente só mexe nos atores (e no ruído)
_LAYOUT_SEED = 20240417
_STREET_RANGE = (-80.0, 320.0)


def _street(world: WorldModel, road_half_width: float = 6.0, sidewalk_width: float = 2.8):
    """
    Faixa de rodagem, passeios e terreno, com topo em z = 0.2.

    As fronteiras entre rótulos do chão (6.0 m e 8.8 m) coincidem com
    fronteiras da grelha global de 0.4 m.
    """
    world.add(Primitive('box', [DRIVEABLE], (0.0, 0.0, 0.0), (np.inf, road_half_width, 0.2)))
    offset = road_half_width + 0.5 * sidewalk_width
    for side in (-1.0, 1.0):
        world.add(Primitive('box', [SIDEWALK], (0.0, side * offset, 0.0), (np.inf, 0.5 * sidewalk_width, 0.2)))
    world.add_plane(TERRAIN, z=0.0, half_thickness=0.2)


def _buildings(world: WorldModel, rng: np.random.Generator):
    x_min, x_max = _STREET_RANGE
    for side in (-1.0, 1.0):
        x = x_min + rng.uniform(0.0, 6.0)
        while x < x_max:
            half_length = rng.uniform(2.0, 5.0)
            half_depth = rng.uniform(1.5, 3.0)
            height = rng.uniform(3.0, 5.0)
            setback = rng.uniform(0.0, 2.5)
            world.add_box(MANMADE,
                          (x + half_length, side * (12.5 + setback + half_depth), 0.2 + 0.5 * height),
                          (half_length, half_depth, 0.5 * height),
                          yaw=rng.uniform(-0.15, 0.15))
            x += 2.0 * half_length + rng.uniform(3.0, 8.0)


def _street_furniture(world: WorldModel, rng: np.random.Generator):
    x_min, x_max = _STREET_RANGE
    for side in (-1.0, 1.0):
        for x in np.arange(x_min, x_max, 17.0) + rng.uniform(0.0, 5.0):
            world.add_box(BARRIER, (x, side * 9.0, 0.7), (rng.uniform(0.8, 1.6), 0.2, 0.5))
        for x in np.arange(x_min, x_max, 11.0) + rng.uniform(0.0, 4.0):
            world.add_column(VEGETATION, x + rng.uniform(-1.5, 1.5), side * rng.uniform(10.2, 10.6),
                             rng.uniform(0.5, 0.8), 0.2, rng.uniform(2.5, 4.5))
    for x in np.arange(x_min, x_max, 23.0) + rng.uniform(0.0, 8.0):
        world.add_column(TRAFFIC_CONE, x, rng.choice([-5.5, 5.5]), 0.3, 0.2, 1.0)


def urban_block(seed: int = 0) -> WorldModel:
    """Rua estática com estrutura suficiente para restringir os 6 graus de liberdade."""
    world = WorldModel(name='urban-block')
    rng = np.random.default_rng(_LAYOUT_SEED)
    _street(world)
    _buildings(world, rng)
    _street_furniture(world, rng)
    return world


def dynamic_traffic(seed: int = 0) -> WorldModel:
    """urban-block mais três atores em movimento, incluindo um autocarro."""
    world = urban_block(seed)
    world.name = 'dynamic-traffic'
    rng = np.random.default_rng([_LAYOUT_SEED, seed])
    jitter = rng.uniform(-4.0, 4.0, size=3)
    speed = rng.uniform(-0.3, 0.3, size=3)
    world.add_actor(Primitive('box', [BUS], (-20.0 + jitter[0], 3.0, 1.8), (6.0, 1.3, 1.6),
                              velocity=(3.0 + speed[0], 0.0, 0.0)))
    world.add_actor(Primitive('box', [CAR], (50.0 + jitter[1], -3.0, 0.95), (2.2, 0.9, 0.75),
                              velocity=(-2.0 + speed[1], 0.0, 0.0)))
    world.add_actor(Primitive('box', [TRUCK], (8.0 + jitter[2], -3.0, 1.6), (4.0, 1.2, 1.4),
                              velocity=(1.5 + speed[2], 0.0, 0.0)))
    return world


def slip_road(seed: int = 0) -> WorldModel:
    """
    Estrada plana sem fim com faixas transversais de 0.4 m (quatro rótulos
    de chão alternados) e um pequeno sinal suspenso a cada 100 m.
    """
    world = WorldModel(name='slip-road')
    # laje de duas camadas de voxels: z em [-0.6, 0.2]
    world.add(Primitive('plane', [DRIVEABLE, OTHER_FLAT, SIDEWALK, TERRAIN], (0.0, 0.0, -0.2),
                        (np.inf, np.inf, 0.4), stripe_width=0.4))
    for x in np.arange(-79.8, 400.0, 100.0):
        world.add_box(MANMADE, (x, 0.2, 4.2), (0.3, 1.0, 0.3))
    return world


def parked_bus(seed: int = 0) -> WorldModel:
    """Rua uniforme ao longo de x; só os autocarros parados fixam a posição longitudinal."""
    world = WorldModel(name='parked-bus')
    _street(world)
    rng = np.random.default_rng([_LAYOUT_SEED, seed])
    for i, x in enumerate(np.arange(-60.0, 320.0, 30.0)):
        side = 1.0 if i % 2 == 0 else -1.0
        world.add_actor(Primitive('box', [BUS], (x + rng.uniform(-3.0, 3.0), side * 4.6, 1.8),
                                  (6.0, 1.3, 1.6)))
    world.add_actor(Primitive('box', [CAR], (30.0 + rng.uniform(-5.0, 5.0), -1.8, 0.95), (2.2, 0.9, 0.75),
                              velocity=(2.5, 0.0, 0.0)))
    world.add_actor(Primitive('box', [TRUCK], (70.0 + rng.uniform(-5.0, 5.0), 1.8, 1.6), (4.0, 1.2, 1.4),
                              velocity=(-1.5, 0.0, 0.0)))
    return world


# ===================== TRAJETÓRIAS =====================

def straight_trajectory(n_frames: int, step: float = 1.0) -> List[Pose]:
    """Linha reta ao longo de x, `step` metros por frame."""
    return [Pose.identity() if i == 0 else Pose(translation=(i * step, 0.0, 0.0)) for i in range(n_frames)]


def curved_trajectory(n_frames: int, step: float = 1.0, amplitude: float = 0.8,
                      period: float = 60.0) -> List[Pose]:
    """
    Avanço em x com desvio lateral y = a·(1 - cos(w·x)); o yaw segue a
    tangente. Começa na identidade.
    """
    w = 2.0 * np.pi / period
    poses = []
    for i in range(n_frames):
        x = i * step
        y = amplitude * (1.0 - np.cos(w * x))
        yaw = np.arctan(amplitude * w * np.sin(w * x))
        poses.append(Pose.from_yaw(yaw, (x, y, 0.0)))
    return poses


def accelerating_trajectory(n_frames: int, step: float = 1.0, acceleration: float = 0.04) -> List[Pose]:
    """Velocidade crescente: x(i) = step·i + acceleration·i²/2."""
    return [Pose(translation=(step * i + 0.5 * acceleration * i * i, 0.0, 0.0)) for i in range(n_frames)]


class Preset:
    """Cena com nome, mundo parametrizado pela semente e trajetória por omissão."""

    def __init__(self, name: str, description: str, world: Callable[[int], WorldModel],
                 trajectory: Callable[[int], List[Pose]]):
        self.name = name
        self.description = description
        self._world = world
        self._trajectory = trajectory

    def world(self, seed: int = 0) -> WorldModel:
        return self._world(seed)

    def trajectory(self, n_frames: int) -> List[Pose]:
        if n_frames < 1:
            raise PresetError(f"n_frames tem de ser >= 1: {n_frames}")
        return self._trajectory(n_frames)

    def __repr__(self):
        return f"Preset({self.name})"


PRESETS: Dict[str, Preset] = {
    'urban-block': Preset('urban-block', "Rua estática com edifícios e mobiliário urbano",
                          urban_block, curved_trajectory),
    'dynamic-traffic': Preset('dynamic-traffic', "urban-block com três veículos em movimento",
                              dynamic_traffic, straight_trajectory),
    'slip-road': Preset('slip-road', "Estrada plana com faixas de rótulos (teste de deslizamento)",
                        slip_road, straight_trajectory),
    'parked-bus': Preset('parked-bus', "Autocarros estacionados numa rua sem textura longitudinal",
                         parked_bus, accelerating_trajectory),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise PresetError(f"Preset desconhecido '{name}'. Disponíveis: {', '.join(PRESETS)}")
