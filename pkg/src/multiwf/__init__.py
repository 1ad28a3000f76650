"""Multi-anisotropic Gevrey wave fronts: exact geometry, symbol estimates and grid probes."""

from .symbol import DSLSyntaxError, OperatorSymbol, parse_coef, parse_operator
from .polytope import NewtonPolyhedron, contains, is_regular, newton_polyhedron, polyhedron_of
from .weights import AnisotropyData, QuasiconicSector, anisotropy, k_of, weight_P, weight_q
from .estimates import (
    EstimateReport,
    SigmaParams,
    characteristic_sample,
    check_multi_quasielliptic,
    check_sigma,
    fit_sigma_params,
    gevrey_index_s_prime,
    operator_geometry,
    principal_part,
)
from .grid import GridField, make_field, read_field, write_field
from .probe import (
    AliasingError,
    ProbeReport,
    fourier_decay_probe,
    inclusion_consistency,
    iterate_growth_probe,
    iterate_wavefront_probe,
    spectral_apply,
    truncation_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "DSLSyntaxError",
    "OperatorSymbol",
    "parse_coef",
    "parse_operator",
    "NewtonPolyhedron",
    "contains",
    "is_regular",
    "newton_polyhedron",
    "polyhedron_of",
    "AnisotropyData",
    "QuasiconicSector",
    "anisotropy",
    "k_of",
    "weight_P",
    "weight_q",
    "EstimateReport",
    "SigmaParams",
    "characteristic_sample",
    "check_multi_quasielliptic",
    "check_sigma",
    "fit_sigma_params",
    "gevrey_index_s_prime",
    "operator_geometry",
    "principal_part",
    "GridField",
    "make_field",
    "read_field",
    "write_field",
    "AliasingError",
    "ProbeReport",
    "fourier_decay_probe",
    "inclusion_consistency",
    "iterate_growth_probe",
    "iterate_wavefront_probe",
    "spectral_apply",
    "truncation_sequence",
]
