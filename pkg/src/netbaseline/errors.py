"""Exception types shared across the package."""


class NetBaselineError(Exception):
    """Base class for package-specific failures."""


class PanelFormatError(NetBaselineError):
    """Malformed panel data: bad CSV schema, bad keys, inconsistent paths."""


class DegenerateLikelihoodError(NetBaselineError):
    """Likelihood cannot be maximised: no events, or -inf at every point."""


class IntensityBoundError(NetBaselineError):
    """Thinning proposal saw an intensity above the supplied bound."""


class EmptyRiskRegionError(NetBaselineError):
    """Edge fraction is zero somewhere the weight function is positive."""


class NumericalError(NetBaselineError):
    """A numerical routine failed to converge or produced non-finite output."""
