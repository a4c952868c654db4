"""Discretized one- and two-photon imaging simulator.

Computes joint, singles and bucket-gated marginal photon-detection
densities for entangled, factorizable and classically correlated pair
sources sent through composable 1-D linear optical systems, and shows
where coincidence-gated (ghost) imaging genuinely needs entanglement.
"""

from .errors import PhysicsError, ValidationError
from .grid import Grid, make_grid, nearest_index
from .measure import (
    Density1D,
    Density2D,
    ImageMetrics,
    biphoton_joint,
    biphoton_singles,
    correlated_joint,
    correlated_marginal,
    correlated_singles,
    entangled_marginal_closed,
    image_metrics,
    marginal_from_joint,
    mixture_joint,
    mixture_marginal,
    mixture_singles,
    single_coherent,
    single_partially_coherent,
)
from .optics import (
    Custom,
    ElementSpec,
    FourierSystem,
    FreeSpace,
    Identity,
    Kernel,
    Mask,
    Scatterer,
    ThinLens,
    chain,
    circulant_matrix,
    compose,
    g_kernel,
    kernel_of,
    unitarity_defect,
    with_scatterers,
)
from .sampling import CoincidenceCounts, empirical_densities, pearson_chi_square, sample_joint
from .scenarios import (
    RunSummary,
    Scenario,
    demo_catalog,
    parse_scenario,
    run_scenario,
    scenario_document,
    serialize_scenario,
    write_outputs,
)
from .sources import (
    BiphotonMixture,
    BiphotonPure,
    CorrelatedPairSource,
    SchmidtSpectrum,
    SinglePhotonMixed,
    SinglePhotonPure,
    SpdcParams,
    correlated_from_intensity,
    entangled_delta,
    factorizable,
    localized_pair_mixture,
    reduced_coherence,
    schmidt_spectrum,
    spdc_amplitude,
)

__version__ = "0.1.0"
