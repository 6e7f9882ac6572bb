"""Exception hierarchy shared by all sweepkernel modules."""


class SweepKernelError(Exception):
    """Base class for every error raised by the library."""


class MalformedBrep(SweepKernelError):
    """The brep has dangling references or an unparseable structure."""


class AssumptionViolation(SweepKernelError):
    """The input is well formed but lies outside the supported class of sweeps."""


class DegenerateNormals(AssumptionViolation):
    pass


class DegenerateFunnel(AssumptionViolation):
    """The contact function vanishes identically on a face prism."""


class DegenerateStrip(AssumptionViolation):
    """A trim function of a sharp edge vanishes on a 2-D region of its funnel."""


class RootClusterTooDense(AssumptionViolation):
    pass


class OutOfInterval(SweepKernelError):
    pass


class SolverDivergence(SweepKernelError):
    pass


class NotSimpleSweep(SweepKernelError):
    pass


class UnmatchedCoedge(SweepKernelError):
    pass


class OpenLoop(SweepKernelError):
    pass


class SingularSample(SweepKernelError):
    pass


class DegenerateTangent(SweepKernelError):
    pass
