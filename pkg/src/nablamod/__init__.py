"""nablamod: exact tools for distance functions valued in step functions.

The package has four layers:

- :mod:`nablamod.stepfn`: the step-function carrier and its quantale
  operations (everything exact, rational arithmetic only);
- :mod:`nablamod.quantale_lab`: finite quantales, the well-below relation,
  and the lattice laws used to classify them;
- :mod:`nablamod.modular`: finite parameterized spaces over the step
  carrier, their axioms, topologies, induced metrics, and morphisms;
- :mod:`nablamod.qcat`: the same spaces seen as enriched categories, plus
  bridges to preorders and to extended quasi-pseudometrics.

:mod:`nablamod.cli` exposes the lot as a command line tool.
"""

from .errors import (
    ContractError,
    InputError,
    NablamodError,
    ParseError,
    ResourceBoundError,
)
from .modular import (
    AxiomReport,
    FiniteTopology,
    PointMap,
    QuasiUniformityReport,
    ScaledModularSpace,
    StepModularSpace,
    candidate_parameters,
    check_axioms,
    check_quasi_uniformity_base,
    chistyakov_example,
    entourage,
    format_space,
    from_gauge,
    induced_distance,
    is_lipschitz,
    is_nonexpansive,
    is_strongly_uniformly_continuous,
    is_uniformly_continuous,
    isolated_points,
    metric_ball_topology,
    neighborhood,
    nonexpansive_violation,
    parse_space,
    random_closed_space,
    random_point_map,
    random_scaled_space,
    regularize,
    scaled_induced_distance,
    scaled_lipschitz_classic,
    scaled_lipschitz_modular,
    scaled_strongly_uniformly_continuous,
    standard_modular,
    topology,
    triangle_closure,
)
from .qcat import (
    ExtendedQPMetric,
    FiniteQCategory,
    NablaCategory,
    QCategoryReport,
    ball,
    ball_topology,
    check_qcategory,
    e_mod,
    e_nabla,
    e_nabla_L,
    format_qcat,
    from_eqpm,
    from_preorder,
    is_q_functor,
    lawvere_truncated_quantale,
    parse_qcat,
    to_eqpm,
    to_preorder,
    u_regularize,
    verify_diagram,
    verify_topology_theorem,
)
from .quantale_lab import (
    FinitePoset,
    FinitePreorder,
    FiniteQuantale,
    LatticeFile,
    QuantaleLawReport,
    check_quantale_laws,
    is_isotone,
    make_example,
    meet_quantale,
    parse_lattice,
    raney_check,
    vdl_check,
    well_below,
    well_below_by_definition,
)
from .stepfn import (
    BOTTOM,
    INF,
    ZERO,
    Cut,
    ExtRational,
    StepFunction,
    eval_at,
    ext,
    f_step,
    format_step_literal,
    is_left_continuous,
    join_op,
    le_op,
    left_regularize,
    meet_op,
    oplus,
    oplus_interior,
    parse_step_literal,
    random_step,
    scale_values,
    time_rescale,
    value_after,
    well_below_fstep,
    well_below_top,
)

__version__ = "0.1.0"
