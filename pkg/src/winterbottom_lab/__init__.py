"""Numerical toolkit for anisotropic capillarity in the upper half-plane.

Wulff and Winterbottom shapes, exact capillary energies of polygons, the
absorbed (tilted) anisotropy, and polygonal energy minimisation.
"""

from .anisotropy import (
    AnisotropySpec,
    SubdiffSet,
    ValidationReport,
    dual_eval,
    evaluate,
    generic_dual,
    select_eta,
    subdifferential,
    validate,
)
from .errors import (
    DegenerateAnisotropyError,
    EmptyClipError,
    GeneratorFailureError,
    InvalidArgumentError,
    InvalidEtaError,
    InvalidPolygonError,
    OptimizationFailureError,
    RegimeError,
    WinterbottomLabError,
)
from .geometry import (
    EnergyBreakdown,
    HalfPlanePolygon,
    area,
    capillary_energy,
    classify_edges,
    clip_to_halfplane,
    hausdorff,
    hausdorff_mod_horizontal,
    random_polygon,
)
from .minimize import (
    MinimizeConfig,
    MinimizeReport,
    minimize_fixed_volume,
    minimize_ratio,
    verify_inequality_sample,
    witness_sequence,
)
from .oracles import OracleCase, reference_area, reference_energy
from .winterbottom import (
    PsiBeta,
    Regime,
    WinterbottomShape,
    WulffShape,
    build_psi,
    energy_identity_check,
    horizontal_shift_vector,
    regime,
    winterbottom,
    wulff,
    wulff_translation_check,
)

__version__ = "0.1.0"
