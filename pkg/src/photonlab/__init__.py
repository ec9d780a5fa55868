"""Multimode Fock-space quantum optics simulator.

Subpackages cover the truncated Fock algebra (``fock``), unitary optical
elements (``elements``), source preparation (``sources``), estimation
protocols (``metrology``), Laguerre-Gauss imaging (``oam_imaging``),
biphoton dispersion interferometry (``dispersion``), and the experiment
runner (``cli``).
"""

from . import dispersion, elements, fock, metrology, oam_imaging, sources
from .fock import (
    BasisState,
    FockSpace,
    ModeKind,
    ModeLabel,
    Observable,
    StateVector,
    annihilate,
    create,
    expectation,
    freq_bin,
    level,
    number_expectation,
    oam,
    path,
    schmidt_rank,
    susskind_glogower,
    variance_and_uncertainty,
)
from .sources import (
    BiphotonSpectrum,
    SpdcOamSpectrum,
    coherent_state,
    frequency_entangled_pair,
    noon_state,
    single_photon,
    spdc_oam_pair,
)

__version__ = "0.1.0"

__all__ = [
    "BasisState",
    "BiphotonSpectrum",
    "FockSpace",
    "ModeKind",
    "ModeLabel",
    "Observable",
    "SpdcOamSpectrum",
    "StateVector",
    "annihilate",
    "coherent_state",
    "create",
    "dispersion",
    "elements",
    "expectation",
    "fock",
    "freq_bin",
    "frequency_entangled_pair",
    "level",
    "metrology",
    "noon_state",
    "number_expectation",
    "oam",
    "oam_imaging",
    "path",
    "schmidt_rank",
    "single_photon",
    "sources",
    "spdc_oam_pair",
    "susskind_glogower",
    "variance_and_uncertainty",
]
