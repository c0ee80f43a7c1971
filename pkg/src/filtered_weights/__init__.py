"""Two-weight inequalities on finite filtered measure spaces."""
from .constants import (
    ConstantsReport,
    a1_const,
    ainf_exp,
    ainf_star,
    all_constants,
    ap_one_weight,
    ap_two_weight,
    bp_const,
    dual_weight,
    mixed_const,
    sp_star,
    testing_backward,
    testing_forward,
)
from .instances import (
    GeneratorSpec,
    Instance,
    InstanceError,
    dumps_instance,
    generate,
    load_instance,
    loads_instance,
    save_instance,
)
from .norms import (
    NormEstimate,
    OperatorSpec,
    estimate_maximal_norm,
    estimate_strong_norm,
    estimate_weak_norm,
    oracle_exhaustive_norm,
)
from .operators import (
    AlphaSequence,
    StoppingTime,
    bilinear_op,
    doob_maximal,
    first_passage,
    positive_op,
    tailed_maximal,
    weak_norm,
    weighted_tailed_maximal,
)
from .principal import (
    PrincipalFamily,
    PrincipalSet,
    build_principal_family,
    carleson_check,
    check_properties,
    maximal_representation_check,
    principal_cover,
)
from .space import (
    FilteredSpace,
    MeasurableSet,
    SpaceError,
    cond_exp,
    dyadic_space,
    enumerate_sets,
    integrate,
    lp_norm,
    weighted_cond_exp,
)
from .verify import (
    Check,
    VerificationReport,
    verify_carleson,
    verify_maximal_bounds,
    verify_remark28,
    verify_representation,
    verify_sparsity,
    verify_strong,
    verify_weak,
    weak_constant,
)

__version__ = "0.1.0"
