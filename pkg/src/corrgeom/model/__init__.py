from .generators import (
    circle_neighbors,
    circle_plane_waves,
    circle_trig_pair,
    gauge_function,
    lattice_dirac_hamiltonian,
    lattice_dirac_sea,
    smooth_periodic,
    torus_tetrads,
)
from .io import model_from_dict, model_to_dict
from .transforms import apply_diffeo, apply_gauge_phase, circle_reflection, circle_rotation
from .types import (
    DiscreteManifold,
    EffectiveModel,
    LatticeDiracModel,
    ReferenceField,
    ReferenceSystem,
)

__all__ = [
    "DiscreteManifold",
    "EffectiveModel",
    "LatticeDiracModel",
    "ReferenceField",
    "ReferenceSystem",
    "apply_diffeo",
    "apply_gauge_phase",
    "circle_neighbors",
    "circle_plane_waves",
    "circle_reflection",
    "circle_rotation",
    "circle_trig_pair",
    "gauge_function",
    "lattice_dirac_hamiltonian",
    "lattice_dirac_sea",
    "model_from_dict",
    "model_to_dict",
    "smooth_periodic",
    "torus_tetrads",
]
