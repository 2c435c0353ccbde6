import logging
from functools import wraps

logger = logging.getLogger(__name__)


class SpeclabError(Exception):
    """Base class for every failure raised by the lab"""


class InstanceError(SpeclabError):
    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class GenericityError(SpeclabError):
    def __init__(self, message: str, locations=None):
        self.locations = list(locations or [])
        super().__init__(message)


class RootFindingError(SpeclabError):
    pass


class QuadratureError(SpeclabError):
    pass


class JetError(SpeclabError):
    pass


class LinearAlgebraError(SpeclabError):
    pass


class ContinuationError(SpeclabError):
    pass


class SurfaceError(SpeclabError):
    pass


class HomologyError(SpeclabError):
    pass


class ThetaError(SpeclabError):
    pass


class EvaluationError(SpeclabError):
    pass


class VariationError(SpeclabError):
    pass


class NavigationError(SpeclabError):
    pass


class HarnessError(SpeclabError):
    pass


def wrap_failure(error_cls, action: str):
    """Re-raise anything escaping the wrapped call as error_cls, keeping lab errors intact"""
    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            try:
                return f(*args, **kwargs)
            except SpeclabError:
                raise
            except Exception as e:
                logger.error(f"Failed to {action}: {str(e)}")
                raise error_cls(f"Failed to {action}: {str(e)}") from e
        return decorated_function
    return decorator
