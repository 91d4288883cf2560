"""Compile catalog networks into ReLU networks with certified size, accuracy and Lipschitz bounds."""
from .algebra import (IdentityRequirement, concat, diag_parallel, id_d, identity_requirement, parallel,
                      sandwich)
from .apps import ApplicationPreset, PresetError, build_application
from .catalog import Catalog, CatalogFunction, WeightFunction, preset_catalog, validate_catalog
from .compiler import CompiledNetwork, CompileError, Variant, compile, compile_log, theoretical_bound
from .network import CatalogNetwork, quantities, realize_exact
from .skeleton import RELU, Activation, ResourceLimitError, ShapeError, Skeleton, realize
from .verify import VerificationReport, check_certificates

__version__ = "0.1.0"

__all__ = [
    "Activation", "ApplicationPreset", "Catalog", "CatalogFunction", "CatalogNetwork", "CompileError",
    "CompiledNetwork", "IdentityRequirement", "PresetError", "RELU", "ResourceLimitError", "ShapeError",
    "Skeleton", "Variant", "VerificationReport", "WeightFunction", "build_application",
    "check_certificates", "compile", "compile_log", "concat", "diag_parallel", "id_d",
    "identity_requirement", "parallel", "preset_catalog", "quantities", "realize", "realize_exact",
    "sandwich", "theoretical_bound", "validate_catalog",
]
