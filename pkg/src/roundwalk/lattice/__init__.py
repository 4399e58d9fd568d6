from .core import (
    Lattice,
    LatticeError,
    MinimalVectorSet,
    enumerate_short,
    lll,
    minimal_vectors,
    random_unimodular,
    reduce_basis,
    well_rounded,
)
from .retract import (
    AlreadyWellRounded,
    CatchEvent,
    LatticeTrajectory,
    catch_time,
    deform_step,
    h2_point_to_lattice,
    lattice_distance,
    lattice_to_h2_point,
    reduce_h2,
    retract,
    retract_h2,
    scaled_norm,
)
