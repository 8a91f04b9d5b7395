"""Revenue-optimal classification under welfare-equalizing fairness constraints."""

from .analytics import (
    AuditReport,
    TheoremCheck,
    audit,
    check_robustness,
    check_theorem1,
    disadvantaged_group,
    group_welfare,
    price_of_fairness,
    revenue,
)
from .classifier import Classifier
from .concepts import (
    ConceptSpec,
    RawUtility,
    UtilityTable,
    is_we_for_eo_family,
    make_utility,
    shift_to_zero_minus,
)
from .estimators import UnawareLender, UnconstrainedLender, WelfareEqualizingLender
from .population import (
    Cell,
    Population,
    SampleRow,
    bin_numeric,
    from_samples,
    validate_population,
)
from .solver import (
    ConcaveCurve,
    WESolveResult,
    rescale_to_exact_equality,
    solve_unaware,
    solve_unconstrained,
    solve_we,
    solve_we_bisection,
    welfare_curve,
)

__version__ = "0.1.0"
