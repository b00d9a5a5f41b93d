"""Linear symplectic and calibrated non-squeezing toolkit."""

from .exceptions import NoWitnessError, PreconditionError, TripwireError
from .forms import (
    ComplexKForm,
    KForm,
    contract,
    evaluate,
    lefschetz_matrix,
    omega_k_sum_formula,
    power,
    pullback,
    wedge,
)
from .symplin import (
    Ellipsoid,
    MapClass,
    SymplecticSpectrum,
    classify_map,
    linear_symplectic_width,
    standard_J,
    standard_omega,
    symplectic_spectrum,
    williamson,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexKForm",
    "Ellipsoid",
    "KForm",
    "MapClass",
    "NoWitnessError",
    "PreconditionError",
    "SymplecticSpectrum",
    "TripwireError",
    "classify_map",
    "contract",
    "evaluate",
    "lefschetz_matrix",
    "linear_symplectic_width",
    "omega_k_sum_formula",
    "power",
    "pullback",
    "standard_J",
    "standard_omega",
    "symplectic_spectrum",
    "wedge",
    "williamson",
]
