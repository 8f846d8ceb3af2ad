"""Generalized cusps in dimension 3: families, groups, orbits and deformations."""

from .deform import (
    DeformPath,
    DeformReport,
    SampleReport,
    alpha_path,
    check_sample,
    constant_path,
    deform_path_check,
    rotation_path,
)
from .families import CuspFamily, CuspRep, cusp_generator
from .groups import (
    RadialFlow,
    TranslationGroup,
    VFGVerdict,
    Weight,
    WeightDecomposition,
    default_flow_weight,
    radial_flow_for_weight,
    translation_group,
    vfg_test,
    weight_decomposition,
)
from .orbits import (
    ConvexityCertificate,
    CuspDomain,
    GridSpec,
    build_cusp_domain,
    domain_hilbert_distance,
    exhaustion_function,
    exhaustion_values,
    flow_time,
    flow_time_raw,
    flow_times,
    orbit_certificate,
)

__all__ = [
    "ConvexityCertificate",
    "CuspDomain",
    "CuspFamily",
    "CuspRep",
    "DeformPath",
    "DeformReport",
    "GridSpec",
    "RadialFlow",
    "SampleReport",
    "TranslationGroup",
    "VFGVerdict",
    "Weight",
    "WeightDecomposition",
    "alpha_path",
    "build_cusp_domain",
    "check_sample",
    "constant_path",
    "cusp_generator",
    "default_flow_weight",
    "deform_path_check",
    "domain_hilbert_distance",
    "exhaustion_function",
    "exhaustion_values",
    "flow_time",
    "flow_time_raw",
    "flow_times",
    "orbit_certificate",
    "radial_flow_for_weight",
    "rotation_path",
    "translation_group",
    "vfg_test",
    "weight_decomposition",
]
