"""Exception hierarchy.

Every domain failure raised by the library derives from `ConvexProjError`,
which the CLI maps to exit code 1.
"""


class ConvexProjError(Exception):
    """Base class for domain errors."""

    code = "domain_error"


class NotEMatrix(ConvexProjError):
    code = "not_e_matrix"


class NoCommonFlag(ConvexProjError):
    code = "no_common_flag"


class ExpOverflow(ConvexProjError, OverflowError):
    code = "overflow"


class NotPointed(ConvexProjError):
    code = "not_pointed"


class PointNotInterior(ConvexProjError):
    code = "point_not_interior"


# The charfn module names the same condition differently.
NotInterior = PointNotInterior


class EmptySet(ConvexProjError):
    code = "empty_set"


class DegenerateSpan(ConvexProjError):
    code = "degenerate_span"


class NumericalDegeneracy(ConvexProjError):
    code = "numerical_degeneracy"


class BadKappa(ConvexProjError, ValueError):
    code = "bad_kappa"


class NonPositiveInput(ConvexProjError, ValueError):
    code = "non_positive_input"


class FlatFunction(ConvexProjError):
    code = "flat_function"


class NoValidAlphaBeta(ConvexProjError):
    code = "no_valid_alpha_beta"


class NotConvexPatch(ConvexProjError):
    code = "not_convex_patch"


class BadParams(ConvexProjError, ValueError):
    code = "bad_params"


class NotVFG(ConvexProjError):
    code = "not_vfg"


class NotEGroup(ConvexProjError):
    code = "not_e_group"


class NotLieClosed(ConvexProjError):
    code = "not_lie_closed"


class UnknownWeight(ConvexProjError, KeyError):
    code = "unknown_weight"


class WrongDimension(ConvexProjError):
    code = "wrong_dimension"


class NotStrictlyConvex(ConvexProjError):
    code = "not_strictly_convex"


class FlowlineMisses(ConvexProjError):
    code = "flowline_misses"
