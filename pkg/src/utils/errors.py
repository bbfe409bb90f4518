"""Exception hierarchy shared by the numerical layers"""


class ConeLayerError(Exception):
    """Base class for all conelayer failures"""


class DomainError(ConeLayerError, ValueError):
    """Invalid aperture or truncation of the meridian domain"""


class MeshQualityError(ConeLayerError):
    """Mesh violates conformity or the attainable angle threshold"""

    def __init__(self, message, min_angle_deg=None):
        super().__init__(message)
        self.min_angle_deg = min_angle_deg


class AssemblyError(ConeLayerError):
    """Non-finite element contribution or inadmissible quadrature"""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class EmptySystemError(ConeLayerError):
    """Every degree of freedom was constrained"""


class SkewFormError(AssemblyError):
    """Skew-chart stiffness lost positive semidefiniteness"""


class FactorizationError(ConeLayerError):
    """Shifted pencil could not be factorized after all retries"""


class SolverError(ConeLayerError):
    """Eigensolver failure that produced no usable pairs"""


class DimensionCapError(ConeLayerError):
    """Dense oracle asked to solve a system above its size cap"""


class BranchCrossingError(ConeLayerError):
    """Eigenvalue branch not simple on the differencing interval"""


class NonConvergentIntegralError(ConeLayerError):
    """Partial sums of a singular integral failed the Cauchy test"""


class OracleRangeError(ConeLayerError, ValueError):
    """Requested oracle value outside the tabulated range"""


class ConfigError(ConeLayerError, ValueError):
    """Invalid or incomplete run configuration"""
